"""Round-level market simulator, built-in example markets, and baselines.

An episode draws the arriving buyer's group with probability q, asks the
agent for a price, resolves acceptance against the market's curves, and feeds
the outcome back.  Instantaneous metrics are expectation-based: each round is
charged the expected regret / fairness gaps of the policy the agent played,
not the realized coin flips, so cumulative curves are smooth at all horizons.

Randomness is split into named streams (group draws, valuation latents, agent
sampling) derived from one seed, so two runs with equal seeds are replayable
bit for bit and paired comparisons across markets share their draws.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    AcceptanceModel,
    MarketConfig,
    PolicyPair,
    PriceGrid,
    best_fixed_price,
    expected_revenue,
    fixed_price_policy,
    procedural_gap,
    stream_seed,
    substantive_gap,
)
from .oracle import solve_fair_optimal

BASELINE_KINDS = ("best_fixed", "ucb_fixed", "fair_oracle", "group_oracle")


# ---------------------------------------------------------------------------
# built-in markets
# ---------------------------------------------------------------------------

def example1_market() -> MarketConfig:
    """The running three-price example: prices (5/8, 7/10, 1), q = 0.3."""
    return example_eps_market(0.0)


def example_eps_market(eps: float) -> MarketConfig:
    """The example family: group-1 acceptance (0.6, 0.5-eps, 0.5-eps) and
    group-2 acceptance (0.8, 0.8, 0.5-eps) on prices (5/8, 7/10, 1)."""
    if not 0.0 <= eps <= 0.45:
        raise ValueError("eps must lie in [0, 0.45] to keep acceptance above the floor")
    return MarketConfig(
        grid=PriceGrid(np.array([0.625, 0.7, 1.0])),
        accept=AcceptanceModel(np.array([0.6, 0.5 - eps, 0.5 - eps]),
                               np.array([0.8, 0.8, 0.5 - eps])),
        q=0.3,
    )


def lowerbound_family_market(j: int, d: int, horizon: int) -> MarketConfig:
    """Hard-instance family: d geometrically spaced prices whose revenue
    profile is exactly flat, except instance j (1-based; j = 0 is the flat
    base) bumps price j's acceptance so it wins by eps = sqrt(d / horizon).

    The bumped value (1+eps)/a_j equals 1/a_{j-1} exactly, so the curve stays
    nonincreasing with a tie rather than a rounding violation.  Both groups
    share the curve and q = 1/2, so fairness is free and only the pricing
    problem is hard.

    Raises:
        ValueError: when the geometric ladder escapes the unit price range
            (needs (1 + eps)^d < 3, i.e. d small next to the horizon).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 <= j <= d:
        raise ValueError(f"j must lie in 0..{d}")
    eps = math.sqrt(d / horizon)
    ladder = [4.0 * (1.0 + eps) ** i for i in range(d + 1)]
    if ladder[d] >= 12.0:
        raise ValueError(
            f"price ladder tops out at {ladder[d]:.3f} >= 12: the construction "
            f"needs (1+eps)^d < 3 with eps = sqrt(d/horizon) = {eps:.4f}; "
            "use fewer prices or a longer horizon")
    prices = np.array(ladder[1:]) / 12.0
    accept = np.array([1.0 / a for a in ladder[1:]])
    if j >= 1:
        accept[j - 1] = 1.0 / ladder[j - 1]  # the exact bump identity
    return MarketConfig(
        grid=PriceGrid(prices),
        accept=AcceptanceModel(accept.copy(), accept.copy()),
        q=0.5,
    )


# ---------------------------------------------------------------------------
# episode runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundRecord:
    t: int
    group: int
    price_index: int
    accepted: bool
    reward: float
    inst_regret: float
    inst_s: float
    inst_u: float
    cum_regret: float
    cum_s: float
    cum_u: float
    cum_reward: float
    epoch: int


@dataclass
class RunTrace:
    """Outcome of one episode: thinned per-round records plus exact totals."""

    horizon: int
    seed: int
    oracle_revenue: float
    records: list[RoundRecord] = field(default_factory=list)
    cum_regret: float = 0.0
    cum_s: float = 0.0
    cum_u: float = 0.0
    cum_reward: float = 0.0
    max_inst_u: float = 0.0
    agent_meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "horizon": self.horizon,
            "seed": self.seed,
            "oracle_revenue": self.oracle_revenue,
            "cum_regret": self.cum_regret,
            "cum_s": self.cum_s,
            "cum_u": self.cum_u,
            "cum_reward": self.cum_reward,
            "avg_reward": self.cum_reward / self.horizon if self.horizon else 0.0,
            "max_inst_u": self.max_inst_u,
            "agent": self.agent_meta,
        }


_CSV_COLUMNS = ("t", "group", "price_index", "accepted", "reward", "inst_regret",
                "inst_s", "inst_u", "cum_regret", "cum_s", "cum_u", "cum_reward", "epoch")


def write_trace_csv(trace: RunTrace, path: str) -> None:
    """Write the thinned records with floats at full 17-significant-digit
    precision, so identical runs produce byte-identical files."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in trace.records:
            writer.writerow([
                r.t, r.group, r.price_index, int(r.accepted), f"{r.reward:.17g}",
                f"{r.inst_regret:.17g}", f"{r.inst_s:.17g}", f"{r.inst_u:.17g}",
                f"{r.cum_regret:.17g}", f"{r.cum_s:.17g}", f"{r.cum_u:.17g}",
                f"{r.cum_reward:.17g}", r.epoch,
            ])


def write_summary_json(summary: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_episode(agent, market: MarketConfig, horizon: int, seed: int,
                record_every: int = 1,
                oracle_revenue: Optional[float] = None,
                epoch_hook: Optional[Callable] = None) -> RunTrace:
    """Run one agent against one market for ``horizon`` rounds.

    Args:
        agent: anything with propose_price(group) -> index,
            observe(group, index, accepted), and current_policy() -> PolicyPair.
        oracle_revenue: per-round revenue of the fair optimum; computed here
            when omitted (pass it in when sweeping many seeds).
        record_every: keep every n-th round record (totals stay exact).
        epoch_hook: called as hook(agent, t) right after any round in which the
            agent's elimination ledger grew (for boundary instrumentation).

    Returns:
        RunTrace with records, exact cumulative metrics, and agent metadata.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    v = market.grid.prices
    curves = (market.accept.group1, market.accept.group2)
    q = market.q
    if oracle_revenue is None:
        oracle_revenue = solve_fair_optimal(market).revenue

    group_rng = random.Random(stream_seed(seed, "env-groups"))
    value_rng = random.Random(stream_seed(seed, "env-values"))

    trace = RunTrace(horizon=horizon, seed=seed, oracle_revenue=oracle_revenue)
    cache: dict[int, tuple] = {}  # id -> (policy ref, regret, s, u); refs pin ids
    ledger = getattr(agent, "ledger", None)
    ledger_len = len(ledger) if ledger is not None else 0

    for t in range(1, horizon + 1):
        group = 1 if group_rng.random() < q else 2
        idx = agent.propose_price(group)
        policy = agent.current_policy()
        key = id(policy)
        hit = cache.get(key)
        if hit is None:
            hit = (policy,
                   oracle_revenue - expected_revenue(market, policy),
                   substantive_gap(market, policy),
                   procedural_gap(market.grid, policy))
            cache[key] = hit
        _, inst_regret, inst_s, inst_u = hit
        epoch = getattr(agent, "epoch", 0)

        accepted = value_rng.random() < curves[group - 1][idx]
        reward = float(v[idx]) if accepted else 0.0
        agent.observe(group, idx, accepted)

        trace.cum_regret += inst_regret
        trace.cum_s += inst_s
        trace.cum_u += inst_u
        trace.cum_reward += reward
        if inst_u > trace.max_inst_u:
            trace.max_inst_u = inst_u
        if t == 1 or t % record_every == 0 or t == horizon:
            trace.records.append(RoundRecord(
                t, group, idx, accepted, reward, inst_regret, inst_s, inst_u,
                trace.cum_regret, trace.cum_s, trace.cum_u, trace.cum_reward, epoch))
        if ledger is not None and len(ledger) != ledger_len:
            ledger_len = len(ledger)
            if epoch_hook is not None:
                epoch_hook(agent, t)

    meta = getattr(agent, "meta", None)
    trace.agent_meta = meta() if callable(meta) else {}
    return trace


# ---------------------------------------------------------------------------
# reference baselines
# ---------------------------------------------------------------------------

class BestFixedAgent:
    """Posts the revenue-best single price (market known in advance)."""

    def __init__(self, market: MarketConfig):
        idx, _ = best_fixed_price(market)
        self._policy = fixed_price_policy(market.d, idx)
        self._idx = idx

    def propose_price(self, group: int) -> int:
        return self._idx

    def observe(self, group: int, price_index: int, accepted: bool) -> None:
        pass

    def current_policy(self) -> PolicyPair:
        return self._policy


class UcbFixedAgent:
    """Group-blind upper-confidence-bound learner over the fixed prices.

    Classic average-plus-root-log bonus on the realized revenue of each price
    (rewards live in [0, 1] because the grid does).  Posts the same price to
    either group, so both fairness gaps are identically zero.
    """

    def __init__(self, grid: PriceGrid):
        self.d = grid.d
        self.prices = grid.prices
        self.counts = np.zeros(self.d, dtype=np.int64)
        self.sums = np.zeros(self.d)
        self.t = 0
        self._policies = [fixed_price_policy(self.d, i) for i in range(self.d)]
        self._arm = 0

    def propose_price(self, group: int) -> int:
        self.t += 1
        if self.t <= self.d:
            self._arm = self.t - 1
        else:
            bonus = np.sqrt(2.0 * math.log(self.t) / self.counts)
            self._arm = int(np.argmax(self.sums / self.counts + bonus))
        return self._arm

    def observe(self, group: int, price_index: int, accepted: bool) -> None:
        self.counts[price_index] += 1
        if accepted:
            self.sums[price_index] += float(self.prices[price_index])

    def current_policy(self) -> PolicyPair:
        return self._policies[self._arm]


class FairOracleAgent:
    """Samples a fixed given policy (typically the fair optimum)."""

    def __init__(self, policy: PolicyPair, seed: int = 0):
        self._policy = policy
        self._rng = random.Random(stream_seed(seed, "agent"))
        self._cums = [np.cumsum(policy.weights(g)) for g in (1, 2)]

    def propose_price(self, group: int) -> int:
        u = self._rng.random()
        return min(int(np.searchsorted(self._cums[group - 1], u, side="right")),
                   self._policy.d - 1)

    def observe(self, group: int, price_index: int, accepted: bool) -> None:
        pass

    def current_policy(self) -> PolicyPair:
        return self._policy


class GroupOracleAgent:
    """Groupwise unconstrained optimum: each group gets its own best price.

    Ignores fairness entirely; its procedural gap is whatever the two argmax
    prices differ by.  Useful as the revenue ceiling in comparisons.
    """

    def __init__(self, market: MarketConfig):
        v = market.grid.prices
        i1 = int(np.argmax(v * market.accept.group1))
        i2 = int(np.argmax(v * market.accept.group2))
        w = np.zeros((2, market.d))
        w[0, i1] = 1.0
        w[1, i2] = 1.0
        self._policy = PolicyPair.from_weights(w[0], w[1])
        self._arms = (i1, i2)

    def propose_price(self, group: int) -> int:
        return self._arms[group - 1]

    def observe(self, group: int, price_index: int, accepted: bool) -> None:
        pass

    def current_policy(self) -> PolicyPair:
        return self._policy


def baseline_agent(kind: str, market: MarketConfig, seed: int = 0,
                   policy: Optional[PolicyPair] = None):
    """Build one of the named reference agents for this market.

    ``fair_oracle`` plays ``policy`` when given, otherwise it solves for the
    fair optimum first.
    """
    if kind == "best_fixed":
        return BestFixedAgent(market)
    if kind == "ucb_fixed":
        return UcbFixedAgent(market.grid)
    if kind == "fair_oracle":
        if policy is None:
            policy = solve_fair_optimal(market).policy
        return FairOracleAgent(policy, seed=seed)
    if kind == "group_oracle":
        return GroupOracleAgent(market)
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
