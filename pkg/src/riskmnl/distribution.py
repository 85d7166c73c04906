"""Finite discrete reward distributions on [0, 1].

A :class:`RewardDistribution` is the object every risk criterion consumes. The
MNL outcome distribution of an assortment is built with :func:`from_assortment`;
product ids are 1-based so that choice id 0 is the no-purchase outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MASS_TOL = 1e-12


class InvalidDistribution(ValueError):
    pass


class InvalidAssortment(ValueError):
    pass


class InvalidParameter(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RewardDistribution:
    """Atoms ``(payoff, mass)`` with strictly increasing payoffs.

    Use :meth:`from_atoms` to build one from arbitrary pairs; it sorts and
    merges equal payoffs. The constructor itself only validates.
    """

    payoffs: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.payoffs, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if x.ndim != 1 or x.shape != m.shape or x.size == 0:
            raise InvalidDistribution("payoffs and masses must be non-empty 1-d arrays of equal length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(m)):
            raise InvalidDistribution("non-finite atom")
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise InvalidDistribution("payoffs must lie in [0, 1]")
        # merged atoms can overshoot 1 by rounding; such masses are clamped below
        if np.any(m < 0.0) or np.any(m > 1.0 + MASS_TOL):
            raise InvalidDistribution("masses must lie in [0, 1]")
        if np.any(np.diff(x) <= 0.0):
            raise InvalidDistribution("payoffs must be strictly increasing")
        total = m.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidDistribution(f"masses sum to {float(total)!r}, not 1")
        object.__setattr__(self, "payoffs", _readonly(x.copy()))
        object.__setattr__(self, "masses", _readonly(np.minimum(m, 1.0)))

    @classmethod
    def from_atoms(cls, atoms: Iterable[Sequence[float]]) -> "RewardDistribution":
        pairs = [(float(x), float(m)) for x, m in atoms]
        if not pairs:
            raise InvalidDistribution("no atoms")
        x = np.array([p[0] for p in pairs])
        m = np.array([p[1] for p in pairs])
        return cls(*_merge(x, m))

    @classmethod
    def point_mass(cls, x: float) -> "RewardDistribution":
        return cls(np.array([float(x)]), np.array([1.0]))

    @classmethod
    def empirical(cls, samples: Sequence[float]) -> "RewardDistribution":
        s = np.asarray(samples, dtype=float)
        if s.size == 0:
            raise InvalidDistribution("empty sample sequence")
        x, counts = np.unique(s, return_counts=True)
        return cls(x, counts / s.size)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.payoffs.tolist(), self.masses.tolist()))

    def __len__(self) -> int:
        return self.payoffs.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RewardDistribution):
            return NotImplemented
        return np.array_equal(self.payoffs, other.payoffs) and np.array_equal(self.masses, other.masses)

    def __repr__(self) -> str:
        return f"RewardDistribution({self.atoms!r})"

    def allclose(self, other: "RewardDistribution", atol: float = 1e-12) -> bool:
        return (
            len(self) == len(other)
            and np.allclose(self.payoffs, other.payoffs, rtol=0.0, atol=atol)
            and np.allclose(self.masses, other.masses, rtol=0.0, atol=atol)
        )


def _merge(x: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by payoff and sum the mass of exactly equal payoffs."""
    ux, inv = np.unique(x, return_inverse=True)
    um = np.zeros(ux.size)
    np.add.at(um, inv, m)
    return ux, um


def from_assortment(S: Iterable[int], v: Sequence[float], r: Sequence[float]) -> RewardDistribution:
    """Outcome distribution of serving ``S`` under MNL preferences ``v``.

    No purchase (payoff 0) has mass ``1/(1 + sum_{j in S} v_j)`` and product
    ``i`` has mass ``v_i/(1 + sum_{j in S} v_j)`` at payoff ``r_i``.
    """
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    idx = assortment_indices(S, v.size)
    den = 1.0 + v[idx].sum()
    x = np.concatenate(([0.0], r[idx]))
    m = np.concatenate(([1.0], v[idx])) / den
    x, m = _merge(x, m)
    total = m.sum()
    if abs(total - 1.0) > MASS_TOL:
        m = m / total
    return RewardDistribution(x, m)


def assortment_indices(S: Iterable[int], n_products: int) -> np.ndarray:
    """0-based sorted index array for a set of 1-based product ids."""
    ids = sorted({int(i) for i in S})
    if ids and (ids[0] < 1 or ids[-1] > n_products):
        raise InvalidAssortment(f"product ids must lie in 1..{n_products}, got {ids}")
    return np.array(ids, dtype=np.int64) - 1


def mean(F: RewardDistribution) -> float:
    return float(F.payoffs @ F.masses)


def moment(F: RewardDistribution, n: int) -> float:
    """Raw moment about zero, ``E[X^n]`` for ``n >= 1``."""
    if int(n) != n or n < 1:
        raise InvalidParameter(f"moment order must be a positive integer, got {n!r}")
    return float((F.payoffs ** int(n)) @ F.masses)


def variance(F: RewardDistribution) -> float:
    # centred form; equal to E[X^2] - E[X]^2 but never negative
    d = F.payoffs - mean(F)
    return float((d * d) @ F.masses)


def cdf_at(F: RewardDistribution, x: float) -> float:
    return float(F.masses[F.payoffs <= x].sum())


def mixture(lam: float, F1: RewardDistribution, F2: RewardDistribution) -> RewardDistribution:
    """The distribution ``lam * F1 + (1 - lam) * F2``."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameter(f"mixture weight must lie in [0, 1], got {lam!r}")
    if lam == 1.0:
        return F1
    if lam == 0.0:
        return F2
    x = np.concatenate((F1.payoffs, F2.payoffs))
    m = np.concatenate((lam * F1.masses, (1.0 - lam) * F2.masses))
    x, m = _merge(x, m)
    total = m.sum()
    if abs(total - 1.0) > MASS_TOL:
        m = m / total
    return RewardDistribution(x, m)
