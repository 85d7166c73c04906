"""Synthetic regret experiment: risk-aware learners against expected-revenue baselines.

Runs every algorithm on randomly generated instances, writes the CSV/JSON
outputs and prints the growth ratio R(T)/R(T/4) of the worst-instance curve
(2.0 for sqrt(t) growth, 4.0 for linear growth) and the final regrets.

    python3 scripts/regret_experiment.py --out runs/regret
    python3 scripts/regret_experiment.py --horizon 20000 --reps 5 --out runs/quick
"""

import argparse
import logging
import time

from riskmnl.harness import ExperimentConfig, regret_ratio, run_experiment, write_results


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON config; overrides the flags below")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--criterion", default="cvar:0.5")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig(n_products=args.n, cardinality_limit=args.k, horizon=args.horizon,
                               repetitions=args.reps, instance_count=args.instances,
                               master_seed=args.seed, criterion=args.criterion)
    start = time.perf_counter()
    res = run_experiment(cfg, threads=args.threads)
    write_results(res, args.out)
    print(f"{len(res.instances)} instances x {cfg.repetitions} reps, T={cfg.horizon}, "
          f"{time.perf_counter() - start:.0f}s")
    for i, ((opt, _), (mopt, _)) in enumerate(zip(res.optima, res.mean_optima)):
        differs = "differs" if opt.assortment != mopt.assortment else "same"
        finals = "  ".join(f"{a}={c.per_instance[i, -1]:.1f}" for a, c in res.curves.items())
        print(f"instance {i}: S*={sorted(opt.assortment)} mean-opt={sorted(mopt.assortment)} ({differs})  {finals}")
    for algo, curve in res.curves.items():
        print(f"{algo:9s} worst R(T)={curve.worst[-1]:10.2f}  R(T)/R(T/4)={regret_ratio(curve, cfg.horizon):.3f}")


if __name__ == "__main__":
    main()
