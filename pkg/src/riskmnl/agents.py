"""Learning policies for risk-aware MNL assortment bandits.

``risk-ucb`` serves, in every episode, the assortment that is optimal under
optimistic preference estimates; ``risk-ts`` does the same with virtual
preferences drawn by correlated Gaussian sampling after a singleton warm
start. ``ucb`` and ``ts`` are the same policies maximising expected revenue.

An episode repeats one assortment until the first no-purchase, so the number
of purchases of product i in an episode is an unbiased estimate of v_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as kern
from .env import EpisodeResult
from .optimizer import ExactOptimizer, optimize_local
from .risk import RiskCriterion

ALGORITHMS = ("risk-ucb", "risk-ts", "ucb", "ts")

# confidence-radius scale of the UCB estimate
UCB_SCALE = 48.0
# posterior spread constants of the TS sampler
TS_VAR_SCALE = 50.0
TS_LOG_SCALE = 75.0


class PhaseError(RuntimeError):
    pass


class WarmStartIncomplete(RuntimeError):
    pass


class ConsistencyError(ValueError):
    pass


@dataclass
class ProductStats:
    """Per-product episode counts ``T_i`` and purchase totals ``n_i``."""

    episodes_served: np.ndarray
    total_purchases: np.ndarray

    @classmethod
    def zeros(cls, n_products: int) -> "ProductStats":
        return cls(np.zeros(n_products, dtype=np.int64), np.zeros(n_products, dtype=np.int64))

    @property
    def mean_estimate(self) -> np.ndarray:
        return self.total_purchases / np.maximum(self.episodes_served, 1)


@dataclass
class AgentState:
    algorithm: str
    criterion: RiskCriterion
    n_products: int
    cardinality_limit: int
    profits: np.ndarray
    horizon: Optional[int] = None
    sample_count: Optional[int] = None
    stats: ProductStats = None
    episode_index: int = 1
    phase: str = "selecting"
    current_assortment: Optional[frozenset] = None
    last_params: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.stats is None:
            self.stats = ProductStats.zeros(self.n_products)
        if self.algorithm in ("risk-ts", "ts"):
            if self.horizon is None or self.horizon < 1:
                raise ValueError("Thompson sampling needs the horizon T")
            if self.sample_count is None:
                self.sample_count = max(self.cardinality_limit, 1)
            if self.sample_count < 1:
                raise ValueError("sample_count must be >= 1")
        self.profits = np.ascontiguousarray(self.profits, dtype=float)

    @property
    def is_ts(self) -> bool:
        return self.algorithm in ("risk-ts", "ts")


def ucb_optimistic_params(stats: ProductStats, ell: int, n_products: int) -> np.ndarray:
    """Optimistic preferences for episode ``ell``; unserved products get 1."""
    log_term = UCB_SCALE * math.log(math.sqrt(n_products) * ell + 1.0)
    return kern.ucb_params(stats.total_purchases, stats.episodes_served, log_term)


def ts_sigma(stats: ProductStats, sample_count: int, horizon: int) -> np.ndarray:
    T = stats.episodes_served
    vbar = stats.mean_estimate
    return (np.sqrt(TS_VAR_SCALE * vbar * (vbar + 1.0) / T)
            + TS_LOG_SCALE * math.sqrt(math.log(horizon * sample_count)) / T)


def ts_virtual_params(stats: ProductStats, rng, sample_count: int, horizon: int) -> np.ndarray:
    """Correlated-sampling virtual preferences, clamped to [0, 1].

    One batch of ``sample_count`` standard normals is shared by every product;
    each product takes the largest of its ``sample_count`` perturbed estimates.
    """
    if stats.episodes_served.min() < 1:
        raise WarmStartIncomplete("every product must be served once before sampling")
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    theta = rng.standard_normal(sample_count)
    log_term = TS_LOG_SCALE * math.sqrt(math.log(horizon * sample_count))
    return kern.ts_params(stats.total_purchases, stats.episodes_served, theta, TS_VAR_SCALE, log_term)


def _optimize(state: AgentState, v: np.ndarray, optimizer_mode: str, optimizer=None) -> frozenset:
    if optimizer_mode == "exact":
        opt = optimizer or ExactOptimizer(state.n_products, state.cardinality_limit)
        return opt.solve(v, state.profits, state.criterion).assortment
    if optimizer_mode == "local":
        init = state.current_assortment or ()
        return optimize_local(v, state.profits, state.cardinality_limit, state.criterion, init=init).assortment
    raise ValueError(f"optimizer_mode must be 'exact' or 'local', got {optimizer_mode!r}")


def begin_episode(state: AgentState, optimizer_mode: str = "exact", rng=None,
                  optimizer: Optional[ExactOptimizer] = None) -> frozenset:
    """Choose the assortment for the next episode and move to the serving phase."""
    if state.phase != "selecting":
        raise PhaseError("begin_episode called while an episode is being served")
    unserved = np.flatnonzero(state.stats.episodes_served == 0)
    if state.is_ts and unserved.size:
        S = frozenset({int(unserved[0]) + 1})
        state.last_params = None
    else:
        if state.is_ts:
            v = ts_virtual_params(state.stats, rng, state.sample_count, state.horizon)
        else:
            v = ucb_optimistic_params(state.stats, state.episode_index, state.n_products)
        state.last_params = v
        S = _optimize(state, v, optimizer_mode, optimizer)
    state.current_assortment = S
    state.phase = "serving"
    return S


def end_episode(state: AgentState, result: EpisodeResult) -> AgentState:
    """Fold one episode's purchases into the statistics of the served products."""
    if state.phase != "serving":
        raise PhaseError("end_episode called with no episode in progress")
    S = state.current_assortment
    if not S.issuperset(result.purchases):
        extra = sorted(set(result.purchases) - S)
        raise ConsistencyError(f"purchases of products {extra} outside served assortment {sorted(S)}")
    served = state.stats.episodes_served
    bought = state.stats.total_purchases
    get = result.purchases.get
    for i in S:
        served[i - 1] += 1
        bought[i - 1] += get(i, 0)
    state.episode_index += 1
    state.phase = "selecting"
    return state


class Agent:
    """Convenience wrapper binding a state to its random stream and optimizer.

    Caches the last optimisation so that repeated identical optimistic
    parameters (common while every estimate is still clipped at 1) skip the
    enumeration.
    """

    def __init__(self, state: AgentState, rng=None, optimizer_mode: str = "exact"):
        self.state = state
        self.rng = rng
        self.optimizer_mode = optimizer_mode
        self._optimizer = None
        if optimizer_mode == "exact":
            self._optimizer = ExactOptimizer(state.n_products, state.cardinality_limit)
        self._cache_key = None
        self._cache_value = None
        self._warm = not state.is_ts

    def begin_episode(self) -> frozenset:
        st = self.state
        if not self._warm:
            self._warm = st.phase == "selecting" and st.stats.episodes_served.min() > 0
        if st.phase != "selecting" or not self._warm:
            return begin_episode(st, self.optimizer_mode, self.rng, self._optimizer)
        if st.is_ts:
            v = ts_virtual_params(st.stats, self.rng, st.sample_count, st.horizon)
        else:
            v = ucb_optimistic_params(st.stats, st.episode_index, st.n_products)
        key = v.tobytes()
        if key != self._cache_key:
            self._cache_key = key
            self._cache_value = _optimize(st, v, self.optimizer_mode, self._optimizer)
        st.last_params = v
        st.current_assortment = self._cache_value
        st.phase = "serving"
        return self._cache_value

    def end_episode(self, result: EpisodeResult) -> None:
        end_episode(self.state, result)


def make_agent(algorithm: str, n_products: int, cardinality_limit: int, profits: Sequence[float],
               criterion: RiskCriterion, horizon: Optional[int] = None, rng=None,
               sample_count: Optional[int] = None, optimizer_mode: str = "exact") -> Agent:
    """Build an agent; the ``ucb`` and ``ts`` baselines always optimise the mean."""
    if algorithm in ("ucb", "ts"):
        criterion = RiskCriterion.mean()
    state = AgentState(algorithm, criterion, n_products, cardinality_limit, profits,
                       horizon=horizon, sample_count=sample_count)
    return Agent(state, rng=rng, optimizer_mode=optimizer_mode)
