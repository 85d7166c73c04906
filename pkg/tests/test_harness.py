import csv
import json
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riskmnl.distribution import InvalidParameter, RewardDistribution, from_assortment
from riskmnl.env import Instance
from riskmnl.harness import (
    AggregateCurve,
    ExperimentConfig,
    Trajectory,
    aggregate,
    best_assortment,
    checkpoint_grid,
    generate_instance,
    regret_ratio,
    rolling_risk,
    run_experiment,
    run_simulation,
    stream,
    write_results,
)
from riskmnl.risk import RiskCriterion, evaluate

RC = RiskCriterion
FIXED = Instance(4, 2, np.array([0.8, 0.3, 0.6, 0.1]), np.array([0.2, 0.9, 0.5, 0.7]))


class FixedAgent:
    """Serves the same assortment in every episode."""

    def __init__(self, S):
        self.S = frozenset(S)

    def begin_episode(self):
        return self.S

    def end_episode(self, result):
        pass


def enumerate_values(inst, c):
    n, k = inst.n_products, inst.cardinality_limit
    return {S: evaluate(c, from_assortment(S, inst.preferences, inst.profits))
            for size in range(k + 1) for S in combinations(range(1, n + 1), size)}


def small_config(**kw):
    base = dict(n_products=5, cardinality_limit=2, horizon=600, repetitions=2, instance_count=2,
                master_seed=11, criterion="cvar:0.5", rolling_window=100)
    base.update(kw)
    return ExperimentConfig(**base)


def test_generate_instance_deterministic():
    a = generate_instance(6, 3, stream(1, 0, 0))
    b = generate_instance(6, 3, stream(1, 0, 0))
    assert a.to_json() == b.to_json()
    assert generate_instance(6, 3, stream(1, 0, 1)).to_json() != a.to_json()


def test_generate_instance_marginals():
    inst = generate_instance(10_000, 1, stream(0, 0, 0))
    assert 0.49 <= inst.preferences.mean() <= 0.51
    assert 0.54 <= inst.profits.mean() <= 0.56
    assert inst.profits.min() >= 0.1


def test_generate_single_product():
    inst = generate_instance(1, 1, stream(3, 0, 0))
    assert inst.n_products == 1 and inst.cardinality_limit == 1
    with pytest.raises(InvalidParameter):
        generate_instance(2, 3, stream(3, 0, 0))


def test_oracle_agent_has_zero_regret():
    c = RC.cvar(0.5)
    opt, _ = best_assortment(FIXED, c)
    traj = run_simulation(FIXED, FixedAgent(opt.assortment), c, 500, rng=stream(0, 2, 0))
    assert isinstance(traj, Trajectory)
    assert traj.horizon == 500
    assert np.all(traj.cumulative_regret == 0.0)


def test_worst_agent_regret_is_linear():
    c = RC.cvar(0.5)
    values = enumerate_values(FIXED, c)
    worst = min(values, key=values.get)
    slope = max(values.values()) - values[worst]
    assert slope > 0.01
    traj = run_simulation(FIXED, FixedAgent(worst), c, 400, rng=stream(0, 2, 1))
    np.testing.assert_allclose(traj.cumulative_regret, slope * np.arange(1, 401), rtol=1e-12)


@pytest.mark.parametrize("algo", ["risk-ucb", "risk-ts", "ucb", "ts"])
def test_regret_increments_nonnegative(algo):
    c = RC.cvar(0.5)
    traj = run_simulation(FIXED, algo, c, 2000, rng=stream(0, 2, 2), env_rng=stream(0, 1, 2))
    assert np.all(np.diff(np.concatenate(([0.0], traj.cumulative_regret))) >= -1e-9)
    assert traj.episode_of_step.size == 2000
    assert traj.served(1) == traj.assortments[0]


def test_simulation_seeded():
    c = RC.entropy(1.0)
    a = run_simulation(FIXED, "risk-ts", c, 1000, rng=stream(5, 2, 0), env_rng=stream(5, 1, 0))
    b = run_simulation(FIXED, "risk-ts", c, 1000, rng=stream(5, 2, 0), env_rng=stream(5, 1, 0))
    assert a.assortments == b.assortments
    assert np.array_equal(a.payoffs, b.payoffs)


def test_large_instance_uses_local_search():
    inst = generate_instance(22, 2, stream(0, 0, 0))
    opt, approx = best_assortment(inst, RC.mean())
    assert approx and len(opt.assortment) <= 2


def test_rolling_examples():
    c = RC.cvar(0.5)
    assert rolling_risk(np.full(5000, 0.5), RC.cvar(0.05), 1000).tolist() == [0.5] * 5
    assert rolling_risk(np.tile([0.0, 1.0], 6), c, 4).tolist() == [0.0, 0.0, 0.0]
    payoffs = np.random.default_rng(0).random(700)
    full = rolling_risk(payoffs, c, 700)
    assert full.size == 1
    assert full[0] == pytest.approx(evaluate(c, RewardDistribution.empirical(payoffs)))
    assert rolling_risk(payoffs, c, 300).size == 2   # trailing partial window dropped
    with pytest.raises(InvalidParameter):
        rolling_risk(payoffs, c, 0)
    with pytest.raises(InvalidParameter):
        rolling_risk(payoffs, c, 701)


def test_checkpoint_grid():
    assert checkpoint_grid(7).tolist() == list(range(1, 8))
    assert checkpoint_grid(10_000).size == 10_000
    g = checkpoint_grid(100_000)
    assert g[0] == 1 and g[-1] == 100_000 and 25_000 in g
    assert g.size == 1001 and np.all(np.diff(g) > 0)


def test_aggregate_examples():
    f = np.sqrt(np.arange(1, 11))
    single = aggregate([[f]], [1, 5, 10])
    assert single.worst.tolist() == f[[0, 4, 9]].tolist()
    two = aggregate([[f], [2 * f]], np.arange(1, 11))
    assert two.worst.tolist() == (2 * f).tolist()
    with pytest.raises(InvalidParameter):
        aggregate([[f], [f[:5]]], [1])
    with pytest.raises(InvalidParameter):
        aggregate([[f]], [11])


@given(st.integers(1, 4), st.integers(1, 4), st.integers(2, 30), st.data())
def test_aggregate_commutes_with_subsampling(n_inst, n_rep, length, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    curves = rng.random((n_inst, n_rep, length)).cumsum(axis=2)
    points = sorted(data.draw(st.sets(st.integers(1, length), min_size=1)))
    full = aggregate(curves, np.arange(1, length + 1))
    sub = aggregate(curves[:, :, np.array(points) - 1], points, curve_times=points)
    np.testing.assert_allclose(full.worst[np.array(points) - 1], sub.worst, rtol=0, atol=1e-12)
    np.testing.assert_allclose(full.per_instance[:, np.array(points) - 1], sub.per_instance, rtol=0, atol=1e-12)


def test_aggregate_matches_raw_csv_oracle(tmp_path):
    # 10 instances x 20 repetitions of synthetic curves, written out and re-read
    rng = np.random.default_rng(1)
    raw = rng.random((10, 20, 50)).cumsum(axis=2)
    times = list(range(1, 51))
    with open(tmp_path / "raw.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        for i in range(10):
            for j in range(20):
                for t in times:
                    w.writerow([i, j, t, repr(float(raw[i, j, t - 1]))])
    sums = {}
    with open(tmp_path / "raw.csv") as fh:
        for i, j, t, x in csv.reader(fh):
            sums[(int(i), int(t))] = sums.get((int(i), int(t)), 0.0) + float(x)
    oracle = [max(sums[(i, t)] / 20 for i in range(10)) for t in times]
    got = aggregate(raw, times).worst
    np.testing.assert_allclose(got, oracle, rtol=1e-13)


def test_regret_ratio():
    t = np.array([1, 25, 100])
    curve = AggregateCurve(t, np.array([[1.0, 5.0, 10.0]]), np.array([1.0, 5.0, 10.0]))
    assert regret_ratio(curve, 100) == 2.0
    with pytest.raises(InvalidParameter):
        regret_ratio(curve, 120)


def test_config_validation():
    with pytest.raises(InvalidParameter):
        small_config(horizon=0)
    with pytest.raises(InvalidParameter):
        small_config(repetitions=0)
    with pytest.raises(InvalidParameter):
        small_config(rolling_window=601)
    with pytest.raises(InvalidParameter):
        small_config(rolling_window=0)
    with pytest.raises(InvalidParameter):
        small_config(algorithms=["risk-ucb", "greedy"])
    with pytest.raises(InvalidParameter):
        ExperimentConfig.from_json({"horizon": 10, "colour": "red"})


def test_config_round_trip(tmp_path):
    cfg = small_config()
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_json()))
    assert ExperimentConfig.load(p) == cfg


def test_experiment_outputs(tmp_path):
    cfg = small_config(save_raw=True)
    res = run_experiment(cfg)
    files = {p.name for p in write_results(res, tmp_path)}
    assert files == {"results.csv", "rolling_risk.csv", "summary.json", "raw_regret.csv"}
    text = (tmp_path / "results.csv").read_bytes().decode("utf-8")
    assert "\r" not in text
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["algo", "instance", "checkpoint_t", "mean_regret", "worst_regret"]
    assert len(rows) == 1 + 4 * 2 * 600
    assert list(csv.reader((tmp_path / "rolling_risk.csv").read_text().splitlines()))[0] == \
        ["algo", "window_index", "value"]
    # worst column is the max over the instance rows at each checkpoint
    by_key = {}
    for algo, inst, t, mean_r, worst in rows[1:]:
        by_key.setdefault((algo, t), []).append((float(mean_r), float(worst)))
    for vals in by_key.values():
        assert max(m for m, _ in vals) == vals[0][1]
    # the raw file reproduces the per-instance means
    raw = {}
    for algo, inst, rep, t, x in list(csv.reader((tmp_path / "raw_regret.csv").read_text().splitlines()))[1:]:
        raw.setdefault((algo, inst, t), []).append(float(x))
    for algo, inst, t, mean_r, _ in rows[1:]:
        assert np.mean(raw[(algo, inst, t)]) == pytest.approx(float(mean_r), rel=1e-15)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["instances"]) == 2


def test_experiment_is_deterministic_and_schedule_free(tmp_path):
    cfg = small_config()
    write_results(run_experiment(cfg), tmp_path / "a")
    write_results(run_experiment(cfg), tmp_path / "b")
    write_results(run_experiment(cfg, threads=2), tmp_path / "c")
    for name in ("results.csv", "rolling_risk.csv", "summary.json"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert a == (tmp_path / "c" / name).read_bytes()


def test_instance_files(tmp_path):
    FIXED.save(tmp_path / "fixed.json")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"horizon": 200, "repetitions": 1, "instance_files": ["fixed.json"],
                                    "n_products": 4, "cardinality_limit": 2, "algorithms": ["risk-ucb"]}))
    res = run_experiment(ExperimentConfig.load(cfg_path))
    assert res.instances[0].to_json() == FIXED.to_json()
