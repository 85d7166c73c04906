"""Randomised property suites for the criteria, the optimizer and the environment.

Each suite returns a :class:`SuiteReport` listing one :class:`Check` per
property; a check passes when it has no violations. Oracles here are coded
independently of the hot-path kernels where that is practical: subset
enumeration uses ``itertools``, the CVaR dual form integrates the CDF
piecewise, and the episode-length fit uses ``scipy.stats``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .distribution import RewardDistribution, from_assortment, mixture
from .env import Environment, Instance
from .risk import RiskCriterion, constants, evaluate

TOL = 1e-9

# one or two parameterisations per criterion that has a Lipschitz constant
LIPSCHITZ_CRITERIA = (
    RiskCriterion.cvar(0.5),
    RiskCriterion.cvar(0.1),
    RiskCriterion.mean(),
    RiskCriterion.moment(2),
    RiskCriterion.moment(3),
    RiskCriterion.entropy(1.0),
    RiskCriterion.entropy(4.0),
    RiskCriterion.btsv(0.5),
    RiskCriterion.btsv(1.0),
    RiskCriterion.negvar(),
    RiskCriterion.meanvar(1.0),
    RiskCriterion.meanvar(0.2),
    RiskCriterion.sharpe(0.2, 0.01),
    RiskCriterion.sharpe(0.5, 1.0),
    RiskCriterion.sortino(0.2, 0.01),
    RiskCriterion.sortino(0.5, 1.0),
)
QUASICONVEX_CRITERIA = (RiskCriterion.var(0.5), RiskCriterion.var(0.1)) + LIPSCHITZ_CRITERIA
MONOTONE_CRITERIA = (
    RiskCriterion.cvar(0.5),
    RiskCriterion.entropy(1.0),
    RiskCriterion.sharpe(0.2, 0.01),
    RiskCriterion.mean(),
)
LAMBDA_GRID = np.round(np.linspace(0.0, 1.0, 11), 10)

# fixed environment for the episode-length checks; sums of v are 0.5, 1.0, 2.3
GEOMETRY_INSTANCE = Instance(4, 3, np.array([0.5, 0.3, 0.7, 0.8]), np.array([0.2, 0.4, 0.6, 0.9]))
GEOMETRY_ASSORTMENTS = ((1,), (2, 3), (1, 3, 4))


@dataclass
class Check:
    name: str
    trials: int = 0
    violations: int = 0
    worst: float = -math.inf   # largest observed (lhs - rhs); <= tolerance passes
    detail: str = ""

    def record(self, excess: float, tol: float = TOL) -> None:
        self.trials += 1
        if excess > self.worst:
            self.worst = excess
        if not excess <= tol:
            self.violations += 1

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.violations == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return f"{status} {self.name}: {self.violations}/{self.trials} violations, worst excess {self.worst:.3g}{extra}"


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [f"[{self.suite}] {c.line()}" for c in self.checks]


# ---------------------------------------------------------------------------
# random inputs


def random_profits(n: int, rng: np.random.Generator) -> np.ndarray:
    # (0, 1]; one draw in five comes from a coarse grid so that equal profits occur
    if rng.random() < 0.2:
        return rng.choice(np.array([0.25, 0.5, 0.75, 1.0]), size=n)
    return 1.0 - rng.random(n)


def random_lipschitz_case(rng: np.random.Generator, max_products: int = 8):
    """A draw ``(S, v, v', r)`` with ``v' >= v`` elementwise and N <= max_products."""
    n = int(rng.integers(1, max_products + 1))
    v = rng.random(n)
    grow = rng.random(n) * (1.0 - v) * (rng.random(n) < 0.7)
    v2 = np.minimum(v + grow, 1.0)
    size = int(rng.integers(0, n + 1))
    S = tuple(int(i) + 1 for i in rng.choice(n, size=size, replace=False))
    return S, v, v2, random_profits(n, rng)


def random_distribution(rng: np.random.Generator, max_atoms: int = 6) -> RewardDistribution:
    k = int(rng.integers(1, max_atoms + 1))
    if rng.random() < 0.3:
        x = rng.choice(np.linspace(0.0, 1.0, 11), size=k)
    else:
        x = rng.random(k)
    m = rng.dirichlet(np.ones(k))
    return RewardDistribution.from_atoms(zip(x.tolist(), m.tolist()))


# ---------------------------------------------------------------------------
# suites


def tv_excess(S, v, v2) -> float:
    """Left minus right side of the total-variation bound for one draw."""
    idx = [i - 1 for i in S]
    d, d2 = 1.0 + sum(v[i] for i in idx), 1.0 + sum(v2[i] for i in idx)
    lhs = sum(abs(v2[i] / d2 - v[i] / d) for i in idx)
    rhs = 2.0 / d2 * sum(v2[i] - v[i] for i in idx)
    return lhs - rhs


def lipschitz(samples: int = 2000, seed: int = 0,
              criteria: Sequence[RiskCriterion] = LIPSCHITZ_CRITERIA) -> SuiteReport:
    """Boundedness, both one-sided Lipschitz forms and the total-variation bound."""
    rng = np.random.default_rng(seed)
    cases = [random_lipschitz_case(rng) for _ in range(samples)]
    report = SuiteReport("lipschitz")
    tv = Check("tv-bound")
    dists = []
    for S, v, v2, r in cases:
        dists.append((from_assortment(S, v, r), from_assortment(S, v2, r)))
        tv.record(tv_excess(S, v, v2))
    for c in criteria:
        g = constants(c)
        bounded = Check(f"{c} bounded")
        weak = Check(f"{c} lipschitz")
        strong = Check(f"{c} lipschitz-strong")
        for (S, v, v2, _), (F, F2) in zip(cases, dists):
            u, u2 = evaluate(c, F), evaluate(c, F2)
            bounded.record(abs(u) - g.gamma1)
            bounded.record(abs(u2) - g.gamma1)
            idx = [i - 1 for i in S]
            growth = sum(v2[i] - v[i] for i in idx)
            weak.record(u2 - u - g.gamma2 / (1.0 + sum(v[i] for i in idx)) * growth)
            strong.record(u2 - u - g.gamma2 / (1.0 + sum(v2[i] for i in idx)) * growth)
        report.checks += [bounded, weak, strong]
    report.checks.append(tv)
    return report


def quasiconvex(pairs: int = 1000, seed: int = 0,
                criteria: Sequence[RiskCriterion] = QUASICONVEX_CRITERIA) -> SuiteReport:
    """U(lam F1 + (1 - lam) F2) <= max(U(F1), U(F2)) on a lambda grid."""
    rng = np.random.default_rng(seed)
    draws = [(random_distribution(rng), random_distribution(rng)) for _ in range(pairs)]
    mixes = [[mixture(lam, F1, F2) for lam in LAMBDA_GRID] for F1, F2 in draws]
    report = SuiteReport("quasiconvex")
    for c in criteria:
        check = Check(str(c))
        worst_case = None
        for (F1, F2), row in zip(draws, mixes):
            top = max(evaluate(c, F1), evaluate(c, F2))
            for lam, M in zip(LAMBDA_GRID, row):
                excess = evaluate(c, M) - top
                if excess > check.worst:
                    worst_case = (float(lam), F1.atoms, F2.atoms)
                check.record(excess)
        if check.violations:
            lam, a1, a2 = worst_case
            check.detail = f"(worst at lambda={lam}, F1={a1}, F2={a2})"
        report.checks.append(check)
    return report


def brute_force_optimum(v, r, K: int, c: RiskCriterion) -> tuple[float, tuple]:
    """Best value over all subsets of size <= K by plain enumeration."""
    n = len(v)
    best, arg = -math.inf, ()
    for size in range(K + 1):
        for S in combinations(range(1, n + 1), size):
            u = evaluate(c, from_assortment(S, v, r))
            if u > best:
                best, arg = u, S
    return best, arg


def monotone_max(instances: int = 500, seed: int = 0,
                 criteria: Sequence[RiskCriterion] = MONOTONE_CRITERIA) -> SuiteReport:
    """Raising every preference never lowers the optimal value."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(instances):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, min(3, n) + 1))
        _, v, v2, r = random_lipschitz_case(rng, max_products=n)
        v, v2, r = v[:n], v2[:n], r[:n]
        cases.append((v, v2, r, k))
    report = SuiteReport("monotone-max")
    for c in criteria:
        check = Check(str(c))
        for v, v2, r, k in cases:
            low, _ = brute_force_optimum(v, r, k, c)
            high, _ = brute_force_optimum(v2, r, k, c)
            check.record(low - high)
        report.checks.append(check)
    return report


def cvar_dual(F: RewardDistribution, alpha: float) -> float:
    """(1/alpha) * (alpha - integral over [0, 1] of min(F(x), alpha)), integrated exactly."""
    xs, ms = F.payoffs, F.masses
    area = 0.0
    cum = 0.0
    for i in range(xs.size):
        cum += ms[i]
        right = xs[i + 1] if i + 1 < xs.size else 1.0
        area += min(cum, alpha) * (right - xs[i])
    return (alpha - area) / alpha


def cvar_dual_suite(count: int = 1000, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    check = Check("closed form vs dual integral")
    for _ in range(count):
        F = random_distribution(rng, max_atoms=8)
        alpha = float(1.0 - rng.random()) if rng.random() < 0.8 else float(rng.choice([0.05, 0.5, 1.0]))
        check.record(abs(evaluate(RiskCriterion.cvar(alpha), F) - cvar_dual(F, alpha)))
    return SuiteReport("cvar-dual", [check])


def geometric_fit(lengths: np.ndarray, p: float, min_expected: float = 5.0) -> float:
    """Chi-square p-value of episode lengths against Geometric(p) on {1, 2, ...}.

    Cells are merged from the right so every expected count is at least
    ``min_expected``; the last cell is the tail ``[k, inf)``.
    """
    n = lengths.size
    k = 1
    while n * (1.0 - p) ** k * p >= min_expected:
        k += 1
    # cells 1..k-1 exact, cell k is the tail
    probs = np.array([(1.0 - p) ** (j - 1) * p for j in range(1, k)] + [(1.0 - p) ** (k - 1)])
    observed = np.array([np.sum(lengths == j) for j in range(1, k)] + [np.sum(lengths >= k)])
    return float(sps.chisquare(observed, n * probs).pvalue)


def episode_geometry(episodes: int = 100_000, seed: int = 0, instance: Instance = GEOMETRY_INSTANCE,
                     assortments: Sequence[Sequence[int]] = GEOMETRY_ASSORTMENTS,
                     rel_tol: float = 0.02, level: float = 0.001) -> SuiteReport:
    """Mean episode length against 1 + sum(v) and a chi-square geometric fit."""
    report = SuiteReport("episode-geom")
    for a, S in enumerate(assortments):
        env = Environment(instance, np.random.default_rng([seed, a]))
        S = frozenset(S)
        lengths = np.fromiter((env.serve(S, 1 << 62).length for _ in range(episodes)), dtype=np.int64,
                              count=episodes)
        expected = 1.0 + float(sum(instance.preferences[i - 1] for i in S))
        mean_check = Check(f"S={sorted(S)} mean length")
        mean_check.record(abs(lengths.mean() / expected - 1.0), rel_tol)
        mean_check.detail = f"(mean {lengths.mean():.5f}, expected {expected:.5f})"
        fit = Check(f"S={sorted(S)} geometric fit")
        pvalue = geometric_fit(lengths, 1.0 / expected)
        fit.record(level - pvalue, 0.0)
        fit.detail = f"(p-value {pvalue:.4f})"
        report.checks += [mean_check, fit]
    return report


# fixed instance of the optimism-coverage check
COVERAGE_INSTANCE = Instance(5, 2, np.array([0.9, 0.2, 0.5, 0.7, 0.35]), np.array([0.3, 0.9, 0.6, 0.45, 0.8]))


def optimism_coverage(runs: int = 200, episode: int = 100, seed: int = 0,
                      instance: Instance = COVERAGE_INSTANCE,
                      criterion: RiskCriterion = RiskCriterion.cvar(0.5)) -> float:
    """Fraction of ``risk-ucb`` runs whose optimistic vector dominates v at ``episode``."""
    from .agents import make_agent, ucb_optimistic_params

    covered = 0
    for run in range(runs):
        agent = make_agent("risk-ucb", instance.n_products, instance.cardinality_limit, instance.profits,
                           criterion)
        env = Environment(instance, np.random.default_rng([seed, run]))
        for _ in range(episode - 1):
            agent.end_episode(env.serve(agent.begin_episode(), 1 << 62))
        st = agent.state
        v_opt = ucb_optimistic_params(st.stats, st.episode_index, st.n_products)
        covered += bool(np.all(instance.preferences <= v_opt))
    return covered / runs


def coverage_suite(runs: int = 200, episode: int = 100, seed: int = 0, level: float = 0.9) -> SuiteReport:
    freq = optimism_coverage(runs, episode, seed)
    check = Check(f"v <= v_tilde at episode {episode}")
    check.record(level - freq, 0.0)
    check.detail = f"(frequency {freq:.3f} over {runs} runs)"
    return SuiteReport("optimism", [check])


class _CountingNormals:
    def __init__(self, rng):
        self._rng = rng
        self.sizes = []

    def standard_normal(self, size):
        self.sizes.append(size)
        return self._rng.standard_normal(size)


def ts_mechanics(instance: Instance = COVERAGE_INSTANCE, episodes: int = 200, seed: int = 0,
                 sample_count: Optional[int] = None) -> SuiteReport:
    """Warm-start singletons and the number of normal draws per episode."""
    from .agents import make_agent

    rng = _CountingNormals(np.random.default_rng(seed))
    agent = make_agent("risk-ts", instance.n_products, instance.cardinality_limit, instance.profits,
                       RiskCriterion.cvar(0.5), horizon=10**6, rng=rng, sample_count=sample_count)
    env = Environment(instance, np.random.default_rng(seed + 1))
    served, draws = [], []
    for _ in range(episodes):
        before = len(rng.sizes)
        S = agent.begin_episode()
        draws.append(sum(rng.sizes[before:]))
        served.append(S)
        agent.end_episode(env.serve(S, 1 << 62))
    n, m = instance.n_products, agent.state.sample_count
    warm = Check("warm start serves N distinct singletons")
    first = served[:n]
    warm.record(0.0 if all(len(S) == 1 for S in first) and len(set(first)) == n else 1.0, 0.0)
    count = Check(f"{m} normal draws per post-warm-start episode")
    for k, d in enumerate(draws):
        count.record(abs(d - (0 if k < n else m)), 0.0)
    return SuiteReport("ts-mechanics", [warm, count])


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "lipschitz": lipschitz,
    "quasiconvex": quasiconvex,
    "monotone-max": monotone_max,
    "cvar-dual": cvar_dual_suite,
    "episode-geom": episode_geometry,
    "optimism": coverage_suite,
    "ts-mechanics": ts_mechanics,
}


def run_suite(name: str, seed: Optional[int] = None) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return SUITES[name]() if seed is None else SUITES[name](seed=seed)
