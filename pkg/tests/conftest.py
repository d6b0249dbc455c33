"""Shared fixtures: the worked example market is solved once per session."""

import pytest

from fairprice import (
    closed_form_example_optimum,
    example1_market,
    solve_fair_optimal,
)


@pytest.fixture(scope="session")
def example_market():
    return example1_market()


@pytest.fixture(scope="session")
def example_solution(example_market):
    """Grid-scan solution of the example market (a second or two; share it)."""
    return solve_fair_optimal(example_market)


@pytest.fixture(scope="session")
def example_closed_form():
    return closed_form_example_optimum(0.0)


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    """Keep CLI invocations inside tests single-process."""
    monkeypatch.setenv("FAIRPRICE_THREADS", "1")
