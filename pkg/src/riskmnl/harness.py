"""Experiment harness: instances, simulations, regret curves and result files.

Random streams
--------------
All randomness derives from one master seed through
``np.random.SeedSequence(master_seed, spawn_key=key)`` with integer keys::

    (0, instance)                     instance generation
    (1, instance, repetition)         customer choices (shared by all algorithms)
    (2, instance, repetition, algo)   agent sampling
    (3, instance)                     local-search start for the optimum

so every repetition is reproducible on its own, independent of scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .agents import ALGORITHMS, make_agent
from .distribution import InvalidParameter
from .env import Environment, Instance
from .optimizer import ENUMERATION_CAP, OptimizationResult, assortment_value, optimize_exact, optimize_local
from .risk import RiskCriterion, empirical_evaluate

log = logging.getLogger(__name__)

ALGO_CODES = {name: i for i, name in enumerate(ALGORITHMS)}
FULL_RESOLUTION_MAX_T = 10_000
N_CHECKPOINTS = 1000


def stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    n_products: int = 10
    cardinality_limit: int = 4
    horizon: int = 100_000
    repetitions: int = 20
    instance_count: int = 5
    master_seed: int = 0
    criterion: RiskCriterion = field(default_factory=lambda: RiskCriterion.cvar(0.5))
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    optimizer_mode: str = "exact"
    rolling_window: Optional[int] = None
    sample_count: Optional[int] = None
    instance_files: list = field(default_factory=list)
    save_raw: bool = False

    def __post_init__(self):
        if isinstance(self.criterion, str):
            self.criterion = RiskCriterion.parse(self.criterion)
        if self.horizon < 1:
            raise InvalidParameter("horizon must be >= 1")
        if self.repetitions < 1:
            raise InvalidParameter("repetitions must be >= 1")
        if not self.instance_files and self.instance_count < 1:
            raise InvalidParameter("instance_count must be >= 1")
        if not 0 <= self.cardinality_limit <= self.n_products:
            raise InvalidParameter("cardinality_limit must lie in 0..n_products")
        if self.rolling_window is not None and not 1 <= self.rolling_window <= self.horizon:
            raise InvalidParameter("rolling_window must lie in 1..horizon")
        if self.optimizer_mode not in ("exact", "local"):
            raise InvalidParameter("optimizer_mode must be 'exact' or 'local'")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise InvalidParameter(f"unknown algorithm {a!r}; expected one of {ALGORITHMS}")
        if not self.algorithms:
            raise InvalidParameter("no algorithms configured")

    def to_json(self) -> dict:
        d = asdict(self)
        d["criterion"] = self.criterion.encode()
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise InvalidParameter(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        cfg = cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        base = Path(path).parent
        cfg.instance_files = [str((base / p) if not Path(p).is_absolute() else p) for p in cfg.instance_files]
        return cfg


# ---------------------------------------------------------------------------
# instances and simulation


def generate_instance(n_products: int, cardinality_limit: int, rng: np.random.Generator) -> Instance:
    """Preferences uniform on [0, 1], profits uniform on [0.1, 1]."""
    if not 0 <= cardinality_limit <= n_products:
        raise InvalidParameter("cardinality_limit must lie in 0..n_products")
    v = rng.uniform(0.0, 1.0, n_products)
    r = rng.uniform(0.1, 1.0, n_products)
    return Instance(n_products, cardinality_limit, v, r)


def best_assortment(instance: Instance, criterion: RiskCriterion,
                    rng: Optional[np.random.Generator] = None) -> tuple[OptimizationResult, bool]:
    """The optimum ``S*`` and whether it is only a local-search approximation."""
    v, r, k = instance.preferences, instance.profits, instance.cardinality_limit
    if instance.n_products <= ENUMERATION_CAP:
        return optimize_exact(v, r, k, criterion), False
    return optimize_local(v, r, k, criterion, init=(), rng=rng), True


@dataclass
class Trajectory:
    """Per-step record of one run.

    Step ``t`` (1-based) belongs to episode ``episode_of_step[t-1]``, which
    served ``assortments[episode]``.
    """

    assortments: list
    episode_of_step: np.ndarray
    payoffs: np.ndarray
    step_risk: np.ndarray
    cumulative_regret: np.ndarray
    optimum: OptimizationResult
    approx_optimum: bool = False

    @property
    def horizon(self) -> int:
        return self.payoffs.size

    def served(self, t: int) -> frozenset:
        return self.assortments[self.episode_of_step[t - 1]]


def run_simulation(instance: Instance, algorithm, criterion: RiskCriterion, horizon: int,
                   optimizer_mode: str = "exact", rng: Optional[np.random.Generator] = None, *,
                   sample_count: Optional[int] = None, optimum=None,
                   env_rng: Optional[np.random.Generator] = None) -> Trajectory:
    """Drive one policy against the MNL environment for ``horizon`` steps.

    ``algorithm`` is an algorithm name or any object with ``begin_episode()``
    and ``end_episode(result)``. Regret per step is
    ``U(F(S*, v)) - U(F(S_t, v))`` under the true preferences.
    ``rng`` feeds the agent; customer choices use ``env_rng`` (default: a
    child stream of ``rng``).
    """
    if horizon < 1:
        raise InvalidParameter("horizon must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    if env_rng is None:
        env_rng, rng = rng.spawn(2)
    approx = False
    if optimum is None:
        optimum, approx = best_assortment(instance, criterion, rng)
    elif isinstance(optimum, tuple):
        optimum, approx = optimum
    if isinstance(algorithm, str):
        agent = make_agent(algorithm, instance.n_products, instance.cardinality_limit, instance.profits,
                           criterion, horizon=horizon, rng=rng, sample_count=sample_count,
                           optimizer_mode=optimizer_mode)
    else:
        agent = algorithm
    v, r = instance.preferences, instance.profits
    value_cache: dict[frozenset, float] = {}
    assortments, lengths, values, payoff_chunks = [], [], [], []
    env = Environment(instance, env_rng)
    t = 0
    while t < horizon:
        S = frozenset(agent.begin_episode())
        result = env.serve(S, horizon - t)
        agent.end_episode(result)
        if S not in value_cache:
            value_cache[S] = assortment_value(criterion, S, v, r)
        assortments.append(S)
        lengths.append(result.length)
        values.append(value_cache[S])
        payoff_chunks.append(result.realized_payoffs)
        t += result.length
    lengths = np.array(lengths)
    episode_of_step = np.repeat(np.arange(lengths.size), lengths)
    step_risk = np.array(values)[episode_of_step]
    regret = np.cumsum(optimum.value - step_risk)
    return Trajectory(assortments, episode_of_step, np.concatenate(payoff_chunks), step_risk, regret,
                      optimum, approx)


def rolling_risk(trajectory, criterion: RiskCriterion, window: int) -> np.ndarray:
    """Empirical risk of each consecutive, disjoint window of realised payoffs.

    A trailing partial window is dropped.
    """
    if window < 1:
        raise InvalidParameter("window must be >= 1")
    payoffs = trajectory.payoffs if isinstance(trajectory, Trajectory) else np.asarray(trajectory, dtype=float)
    if window > payoffs.size:
        raise InvalidParameter(f"window {window} exceeds trajectory length {payoffs.size}")
    n = payoffs.size // window
    return np.array([empirical_evaluate(criterion, payoffs[i * window:(i + 1) * window]) for i in range(n)])


# ---------------------------------------------------------------------------
# aggregation


def checkpoint_grid(horizon: int) -> np.ndarray:
    """Every step up to 1e4 steps; otherwise 1000 even checkpoints plus 1 and T."""
    if horizon <= FULL_RESOLUTION_MAX_T:
        return np.arange(1, horizon + 1)
    grid = np.round(np.linspace(horizon / N_CHECKPOINTS, horizon, N_CHECKPOINTS)).astype(np.int64)
    return np.unique(np.concatenate(([1], grid, [horizon])))


@dataclass
class AggregateCurve:
    times: np.ndarray
    per_instance: np.ndarray
    worst: np.ndarray


def aggregate(curves, checkpoints: Sequence[int], curve_times: Optional[Sequence[int]] = None) -> AggregateCurve:
    """Mean over repetitions per instance, then pointwise max over instances.

    ``curves[i][j]`` is the cumulative-regret curve of repetition ``j`` on
    instance ``i``, sampled at ``curve_times`` (default ``1..len``).
    ``checkpoints`` must be a subset of ``curve_times``.
    """
    lengths = {len(c) for inst in curves for c in inst}
    if not lengths:
        raise InvalidParameter("no curves to aggregate")
    if len(lengths) != 1:
        raise InvalidParameter(f"curves have mismatched horizons: {sorted(lengths)}")
    (length,) = lengths
    times = np.arange(1, length + 1) if curve_times is None else np.asarray(curve_times)
    if times.size != length:
        raise InvalidParameter("curve_times does not match the curve length")
    checkpoints = np.asarray(checkpoints)
    pos = np.searchsorted(times, checkpoints)
    if np.any(pos >= times.size) or np.any(times[np.minimum(pos, times.size - 1)] != checkpoints):
        raise InvalidParameter("checkpoints must be sampled times of the curves")
    per_instance = np.array([np.mean([np.asarray(c, dtype=float)[pos] for c in inst], axis=0) for inst in curves])
    return AggregateCurve(checkpoints, per_instance, per_instance.max(axis=0))


# ---------------------------------------------------------------------------
# experiments


def experiment_instances(cfg: ExperimentConfig) -> list[Instance]:
    if cfg.instance_files:
        return [Instance.load(p) for p in cfg.instance_files]
    return [generate_instance(cfg.n_products, cfg.cardinality_limit, stream(cfg.master_seed, 0, i))
            for i in range(cfg.instance_count)]


def _run_task(args):
    cfg, instance, inst_idx, rep, algo, optimum = args
    traj = run_simulation(
        instance, algo, cfg.criterion, cfg.horizon, cfg.optimizer_mode,
        rng=stream(cfg.master_seed, 2, inst_idx, rep, ALGO_CODES[algo]),
        env_rng=stream(cfg.master_seed, 1, inst_idx, rep),
        sample_count=cfg.sample_count, optimum=optimum,
    )
    grid = checkpoint_grid(cfg.horizon)
    rolling = None
    if cfg.rolling_window:
        rolling = rolling_risk(traj, cfg.criterion, cfg.rolling_window)
    return traj.cumulative_regret[grid - 1], rolling


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    instances: list
    optima: list
    checkpoints: np.ndarray
    raw: dict            # algo -> array (instances, repetitions, checkpoints)
    curves: dict         # algo -> AggregateCurve
    rolling: dict        # algo -> mean rolling risk per window (or empty)
    mean_optima: list


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    instances = experiment_instances(cfg)
    optima = [best_assortment(inst, cfg.criterion, stream(cfg.master_seed, 3, i)) for i, inst in enumerate(instances)]
    mean_optima = [best_assortment(inst, RiskCriterion.mean(), stream(cfg.master_seed, 3, i))
                   for i, inst in enumerate(instances)]
    tasks = [(cfg, inst, i, rep, algo, optima[i])
             for algo in cfg.algorithms for i, inst in enumerate(instances) for rep in range(cfg.repetitions)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        outputs = []
        for n, task in enumerate(tasks):
            outputs.append(_run_task(task))
            log.debug("finished run %d/%d", n + 1, len(tasks))
    grid = checkpoint_grid(cfg.horizon)
    raw, curves, rolling = {}, {}, {}
    n_inst, n_rep = len(instances), cfg.repetitions
    for a, algo in enumerate(cfg.algorithms):
        chunk = outputs[a * n_inst * n_rep:(a + 1) * n_inst * n_rep]
        arr = np.array([o[0] for o in chunk]).reshape(n_inst, n_rep, grid.size)
        raw[algo] = arr
        curves[algo] = aggregate(arr, grid, curve_times=grid)
        if cfg.rolling_window:
            rolling[algo] = np.mean([o[1] for o in chunk], axis=0)
    return ExperimentResult(cfg, instances, optima, grid, raw, curves, rolling, mean_optima)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def results_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algo", "instance", "checkpoint_t", "mean_regret", "worst_regret"])
    for algo, curve in res.curves.items():
        for i in range(curve.per_instance.shape[0]):
            for c, t in enumerate(curve.times):
                w.writerow([algo, i, int(t), _fmt(curve.per_instance[i, c]), _fmt(curve.worst[c])])
    return buf.getvalue()


def rolling_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algo", "window_index", "value"])
    for algo, values in res.rolling.items():
        for k, x in enumerate(values):
            w.writerow([algo, k, _fmt(x)])
    return buf.getvalue()


def raw_csv(res: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algo", "instance", "repetition", "checkpoint_t", "regret"])
    for algo, arr in res.raw.items():
        for i in range(arr.shape[0]):
            for j in range(arr.shape[1]):
                for c, t in enumerate(res.checkpoints):
                    w.writerow([algo, i, j, int(t), _fmt(arr[i, j, c])])
    return buf.getvalue()


def summary(res: ExperimentResult) -> dict:
    out = {"config": res.config.to_json(), "instances": []}
    for i, inst in enumerate(res.instances):
        (opt, approx), (mopt, _) = res.optima[i], res.mean_optima[i]
        entry = {
            "index": i,
            "instance": inst.to_json(),
            "optimum": sorted(opt.assortment),
            "optimum_value": opt.value,
            "approx_optimum": approx,
            "mean_optimum": sorted(mopt.assortment),
            "final_mean_regret": {a: float(c.per_instance[i, -1]) for a, c in res.curves.items()},
        }
        out["instances"].append(entry)
    return out


def write_results(res: ExperimentResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"results.csv": results_csv(res),
             "summary.json": json.dumps(summary(res), indent=2, sort_keys=True) + "\n"}
    if res.rolling:
        files["rolling_risk.csv"] = rolling_csv(res)
    if res.config.save_raw:
        files["raw_regret.csv"] = raw_csv(res)
    written = []
    for name, text in files.items():
        p = out / name
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(p)
    return written


def regret_ratio(curve: AggregateCurve, horizon: int) -> float:
    """Worst-instance regret at T over regret at T/4 (2.0 for pure sqrt(t) growth)."""
    t4 = horizon // 4
    at = dict(zip(curve.times.tolist(), curve.worst.tolist()))
    if t4 not in at:
        raise InvalidParameter(f"checkpoint grid does not contain T/4 = {t4}")
    denom = at[t4]
    return math.inf if denom <= 0 else at[horizon] / denom
