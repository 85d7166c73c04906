"""Risk-optimal assortment under a cardinality limit.

:func:`optimize_exact` enumerates every subset of size at most K (ordered by
size, then lexicographically by product id, so the first maximiser is the
smallest one). :func:`optimize_local` hill-climbs over add / delete / swap
moves for instances too large to enumerate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as kern
from .distribution import assortment_indices
from .risk import RiskCriterion

ENUMERATION_CAP = 20
IMPROVEMENT_TOL = 1e-12


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OptimizationResult:
    assortment: frozenset
    value: float
    evaluations: int

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.assortment))


@lru_cache(maxsize=16)
def subset_table(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """All subsets of range(n) with size <= k, padded with -1, in tie-break order."""
    rows = sum(comb(n, s) for s in range(k + 1))
    members = np.full((rows, max(k, 1)), -1, dtype=np.int64)
    sizes = np.empty(rows, dtype=np.int64)
    row = 0
    for s in range(k + 1):
        for c in combinations(range(n), s):
            members[row, :s] = c
            sizes[row] = s
            row += 1
    members.setflags(write=False)
    sizes.setflags(write=False)
    return members, sizes


class ExactOptimizer:
    """Enumeration over a fixed (N, K) table, reusable across many preference vectors.

    The table is re-indexed once per profit vector so that every row lists
    products by non-decreasing profit; row order (and so tie-breaking) is
    unchanged.
    """

    def __init__(self, n_products: int, cardinality_limit: int, cap: int = ENUMERATION_CAP):
        if not 0 <= cardinality_limit <= n_products:
            raise ValueError(f"cardinality limit must lie in 0..{n_products}")
        if n_products > cap:
            raise EnumerationTooLarge(
                f"N={n_products} exceeds the enumeration cap {cap}; use optimize_local instead"
            )
        self.n_products = n_products
        self.cardinality_limit = cardinality_limit
        self.members, self.sizes = subset_table(n_products, cardinality_limit)
        self._profit_key = None

    def _bind(self, r: np.ndarray) -> None:
        key = r.tobytes()
        if key == self._profit_key:
            return
        order = np.argsort(r, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        pos = np.where(self.members >= 0, rank[np.maximum(self.members, 0)], np.iinfo(np.int64).max)
        pos = np.sort(pos, axis=1)
        self._order = order
        self._positions = np.ascontiguousarray(np.where(pos == np.iinfo(np.int64).max, -1, pos))
        self._r_sorted = np.ascontiguousarray(r[order])
        self._labels = [frozenset(int(i) + 1 for i in self.members[row, : self.sizes[row]])
                        for row in range(self.sizes.size)]
        self._profit_key = key

    def solve_row(self, v: np.ndarray, r: np.ndarray, c: RiskCriterion) -> tuple[int, float]:
        self._bind(r)
        return kern.best_subset(c.code, c.params, v[self._order], self._r_sorted,
                                self._positions, self.sizes, IMPROVEMENT_TOL)

    def solve(self, v, r, c: RiskCriterion) -> OptimizationResult:
        v = np.asarray(v, dtype=float)
        r = np.asarray(r, dtype=float)
        row, value = self.solve_row(v, r, c)
        return OptimizationResult(self._labels[row], float(value), int(self.sizes.size))


def optimize_exact(v: Sequence[float], r: Sequence[float], K: int, c: RiskCriterion,
                   cap: int = ENUMERATION_CAP) -> OptimizationResult:
    return ExactOptimizer(len(v), K, cap).solve(v, r, c)


def assortment_value(c: RiskCriterion, S: Iterable[int], v, r) -> float:
    v = np.ascontiguousarray(v, dtype=float)
    r = np.ascontiguousarray(r, dtype=float)
    return float(kern.evaluate_assortment(c.code, c.params, v, r, assortment_indices(S, v.size)))


def optimize_local(v: Sequence[float], r: Sequence[float], K: int, c: RiskCriterion,
                   init: Optional[Iterable[int]] = None,
                   rng: Optional[np.random.Generator] = None) -> OptimizationResult:
    """Steepest-ascent local search from ``init``.

    Each step takes the best neighbour (add if below K, delete, or swap one
    product in for one out) that improves by more than 1e-12, and stops when
    none does. Without ``init`` a random assortment of size at most K is drawn
    from ``rng``.
    """
    v = np.ascontiguousarray(v, dtype=float)
    r = np.ascontiguousarray(r, dtype=float)
    n = v.size
    if init is None:
        rng = rng if rng is not None else np.random.default_rng()
        size = int(rng.integers(0, K + 1))
        init = (rng.choice(n, size=size, replace=False) + 1).tolist()
    current = assortment_indices(init, n)
    if current.size > K:
        raise ValueError(f"initial assortment has {current.size} products, limit is {K}")
    value = float(kern.evaluate_assortment(c.code, c.params, v, r, current))
    evaluations = 1
    while True:
        move, a, b, best, evals = kern.best_neighbor(
            c.code, c.params, v, r, current, K, value, IMPROVEMENT_TOL
        )
        evaluations += int(evals)
        if move == 0:
            break
        s = set(current.tolist())
        if move == 1:
            s.add(int(a))
        elif move == 2:
            s.discard(int(a))
        else:
            s.discard(int(a))
            s.add(int(b))
        current = np.array(sorted(s), dtype=np.int64)
        value = float(best)
    return OptimizationResult(frozenset(int(i) + 1 for i in current), value, evaluations)

