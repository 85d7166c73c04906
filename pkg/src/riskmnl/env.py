"""Ground-truth MNL environment: customer choices and serve-until-no-purchase episodes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as kern
from .distribution import assortment_indices


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    """A bandit problem: N products, cardinality limit K, preferences v, profits r."""

    n_products: int
    cardinality_limit: int
    preferences: np.ndarray
    profits: np.ndarray

    def __post_init__(self):
        v = np.array(self.preferences, dtype=float)
        r = np.array(self.profits, dtype=float)
        n, k = int(self.n_products), int(self.cardinality_limit)
        if n < 1:
            raise InvalidInstance(f"need at least one product, got n={n}")
        if not 0 <= k <= n:
            raise InvalidInstance(f"cardinality limit must lie in 0..{n}, got {k}")
        if v.shape != (n,) or r.shape != (n,):
            raise InvalidInstance(f"preferences and profits must both have length {n}")
        if not np.all((v >= 0.0) & (v <= 1.0)):
            raise InvalidInstance("preferences must lie in [0, 1]")
        if not np.all((r > 0.0) & (r <= 1.0)):
            raise InvalidInstance("profits must lie in (0, 1]")
        v.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "n_products", n)
        object.__setattr__(self, "cardinality_limit", k)
        object.__setattr__(self, "preferences", v)
        object.__setattr__(self, "profits", r)

    def to_json(self) -> dict:
        return {
            "n": self.n_products,
            "k": self.cardinality_limit,
            "v": self.preferences.tolist(),
            "r": self.profits.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Instance":
        try:
            return cls(obj["n"], obj["k"], obj["v"], obj["r"])
        except (KeyError, TypeError) as e:
            raise InvalidInstance(f"instance object needs keys n, k, v, r: {e}") from None

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")


@dataclass
class EpisodeResult:
    length: int
    purchases: dict[int, int]
    realized_payoffs: np.ndarray
    truncated_by_horizon: bool = False


def choice_probabilities(S: Iterable[int], v: Sequence[float]) -> dict[int, float]:
    """MNL choice probabilities over ``{0} | S``; 0 is no purchase."""
    v = np.asarray(v, dtype=float)
    idx = assortment_indices(S, v.size)
    den = 1.0 + v[idx].sum()
    probs = {0: 1.0 / den}
    for i in idx:
        probs[int(i) + 1] = v[i] / den
    return probs


def _choice_table(idx: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Cumulative choice probabilities ordered as (no purchase, *idx)."""
    return kern.choice_table(idx, np.ascontiguousarray(v, dtype=float))


def sample_choice(S: Iterable[int], v: Sequence[float], rng: np.random.Generator) -> int:
    v = np.asarray(v, dtype=float)
    idx = assortment_indices(S, v.size)
    cum = _choice_table(idx, v)
    j = min(int(np.searchsorted(cum, rng.random(), side="right")), idx.size)
    return 0 if j == 0 else int(idx[j - 1]) + 1


# uniforms drawn per block while an episode runs; unused draws are discarded
_BLOCK = 32


class Environment:
    """An instance bound to its customer-choice stream.

    Choice tables are cached per assortment, so repeated episodes of the same
    assortment only pay for the sampling.
    """

    def __init__(self, instance: Instance, rng: np.random.Generator):
        self.instance = instance
        self.rng = rng
        self._tables: dict = {}

    def _table(self, S: frozenset):
        entry = self._tables.get(S)
        if entry is None:
            inst = self.instance
            idx = assortment_indices(S, inst.n_products)
            entry = (
                kern.choice_table(idx, inst.preferences),
                tuple(int(i) + 1 for i in idx),
                np.concatenate(([0.0], inst.profits[idx])),
            )
            self._tables[S] = entry
        return entry

    def serve(self, S: Iterable[int], remaining_horizon: int) -> EpisodeResult:
        """Serve ``S`` until the first no-purchase or until the horizon runs out."""
        if remaining_horizon < 1:
            raise ValueError(f"remaining_horizon must be >= 1, got {remaining_horizon}")
        cum, ids, pay = self._table(S if isinstance(S, frozenset) else frozenset(S))
        j = np.empty(min(remaining_horizon, _BLOCK), dtype=np.int64)
        served = 0
        stopped = False
        while served < remaining_horizon and not stopped:
            block = min(_BLOCK, remaining_horizon - served)
            if served + block > j.size:
                j = np.concatenate((j, np.empty(max(j.size, block), dtype=np.int64)))
            used, stopped = kern.serve(cum, self.rng.random(block), j, served)
            served += used
        j = j[:served]
        counts = np.bincount(j, minlength=len(ids) + 1)[1:].tolist()
        return EpisodeResult(
            length=served,
            purchases=dict(zip(ids, counts)),
            realized_payoffs=pay[j],
            truncated_by_horizon=not stopped,
        )


def run_episode(S: Iterable[int], instance: Instance, rng: np.random.Generator,
                remaining_horizon: int) -> EpisodeResult:
    """Serve ``S`` until the first no-purchase or until the horizon runs out."""
    return Environment(instance, rng).serve(S, remaining_horizon)
