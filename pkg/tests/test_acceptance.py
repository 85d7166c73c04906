"""End-to-end acceptance checks, one test per numbered criterion.

Each test records a ``CRITERION n: PASS|FAIL ...`` line; the lines are printed
as they are produced and again in a summary section at the end of the run.
Criteria 9 and 11 run the full regret experiment (several minutes each).
"""

import filecmp
import time

import numpy as np
import pytest

from riskmnl import verify
from riskmnl.harness import ExperimentConfig, regret_ratio, run_experiment, write_results

from conftest import ACCEPTANCE_LINES


def report(number, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line, flush=True)
    return ok


def failures(rep):
    return "\n".join(line for line in rep.lines() if "FAIL" in line)


@pytest.fixture(scope="module")
def lipschitz_report():
    start = time.perf_counter()
    rep = verify.lipschitz(samples=2000, seed=0)
    return rep, time.perf_counter() - start


def test_criterion_01_bounded_and_lipschitz(lipschitz_report):
    rep, seconds = lipschitz_report
    checks = [c for c in rep.checks if c.name.endswith(" bounded") or c.name.endswith(" lipschitz")]
    bad = [c.line() for c in checks if not c.passed]
    ok = report(1, not bad and seconds < 120,
                f"{len(checks)} checks on 2000 draws, {len(bad)} failing, {seconds:.1f}s")
    assert ok, "\n".join(bad) or f"runtime {seconds:.1f}s"


def test_criterion_02_strong_lipschitz(lipschitz_report):
    rep, _ = lipschitz_report
    checks = [c for c in rep.checks if c.name.endswith("lipschitz-strong")]
    bad = [c.line() for c in checks if not c.passed]
    ok = report(2, not bad, f"{len(checks)} criteria on 2000 draws, {len(bad)} failing")
    assert ok, "\n".join(bad)


def test_criterion_03_quasiconvexity():
    rep = verify.quasiconvex(pairs=1000, seed=0)
    ok = report(3, rep.passed, f"{len(rep.checks)} criteria x 1000 pairs x 11 weights, "
                               f"worst excess {max(c.worst for c in rep.checks):.3g}")
    assert ok, failures(rep)


def test_criterion_04_monotone_maximum():
    rep = verify.monotone_max(instances=500, seed=0)
    ok = report(4, rep.passed, f"{len(rep.checks)} criteria x 500 instances, "
                               f"worst excess {max(c.worst for c in rep.checks):.3g}")
    assert ok, failures(rep)


def test_criterion_05_total_variation(lipschitz_report):
    rep, _ = lipschitz_report
    tv = rep.check("tv-bound")
    ok = report(5, tv.passed and tv.trials == 2000, f"{tv.violations}/{tv.trials} violations")
    assert ok


def test_criterion_06_cvar_dual():
    rep = verify.cvar_dual_suite(count=1000, seed=0)
    c = rep.checks[0]
    ok = report(6, rep.passed, f"{c.violations}/{c.trials} violations, worst gap {c.worst:.3g}")
    assert ok


def test_criterion_07_episode_geometry():
    rep = verify.episode_geometry(episodes=100_000, seed=0)
    ok = report(7, rep.passed, "; ".join(f"{c.name} {c.detail}" for c in rep.checks))
    assert ok, failures(rep)


def test_criterion_08_optimism_coverage():
    freq = verify.optimism_coverage(runs=200, episode=100, seed=0)
    ok = report(8, freq >= 0.9, f"coverage frequency {freq:.3f} (need >= 0.9)")
    assert ok


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    cfg = ExperimentConfig(n_products=10, cardinality_limit=4, horizon=100_000, repetitions=20,
                           instance_count=5, master_seed=0, criterion="cvar:0.5", save_raw=True)
    out = tmp_path_factory.mktemp("run_a")
    start = time.perf_counter()
    res = run_experiment(cfg)
    seconds = time.perf_counter() - start
    write_results(res, out)
    return cfg, res, out, seconds


@pytest.mark.slow
def test_criterion_09_regret_growth(experiment):
    cfg, res, _, seconds = experiment
    ratios = {a: regret_ratio(res.curves[a], cfg.horizon) for a in ("risk-ucb", "risk-ts")}
    growth_ok = all(1.3 <= r <= 3.0 for r in ratios.values())
    separated = []
    for i, ((opt, _), (mopt, _)) in enumerate(zip(res.optima, res.mean_optima)):
        if opt.assortment == mopt.assortment:
            continue
        final = {a: res.curves[a].per_instance[i, -1] for a in res.curves}
        if final["risk-ucb"] < 0.5 * final["ucb"] and final["risk-ts"] < 0.5 * final["ts"]:
            separated.append(i)
    ok = growth_ok and bool(separated) and seconds < 900
    ratio_text = ", ".join(f"{a} {r:.3f}" for a, r in ratios.items())
    report(9, ok, f"(a) R(T)/R(T/4): {ratio_text}; (b) separated instances {separated}; {seconds:.0f}s")
    assert growth_ok, ratios
    assert separated
    assert seconds < 900


def test_criterion_10_ts_mechanics():
    rep = verify.ts_mechanics(episodes=200, seed=0)
    ok = report(10, rep.passed, "; ".join(f"{c.name}: {c.violations} violations" for c in rep.checks))
    assert ok


@pytest.mark.slow
def test_criterion_11_determinism(experiment, tmp_path):
    cfg, _, first, _ = experiment
    write_results(run_experiment(cfg), tmp_path)
    names = sorted(p.name for p in first.glob("*.csv"))
    match, mismatch, errors = filecmp.cmpfiles(first, tmp_path, names, shallow=False)
    ok = report(11, names and not mismatch and not errors,
                f"{len(match)} CSV files byte-identical across two runs ({', '.join(names)})")
    assert ok, (mismatch, errors)
