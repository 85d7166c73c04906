"""Command-line front end.

Exit status is 0 on success, 1 when inputs fail validation or a computation
fails, and 2 on usage errors (argparse's convention). Diagnostics go to
standard error; results go to standard output or the named files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .distribution import RewardDistribution
from .env import Instance
from .harness import ExperimentConfig, generate_instance, run_experiment, stream, write_results
from .optimizer import optimize_exact, optimize_local
from .risk import RiskCriterion, evaluate
from .verify import SUITES, run_suite


class CommandError(Exception):
    """Validation or compute failure reported with exit status 1."""


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {value}")
    return value


def _criterion(text: str) -> RiskCriterion:
    try:
        return RiskCriterion.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskmnl", description="Risk-aware MNL assortment bandits.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("simulate", help="run a regret experiment from a JSON config")
    s.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
    s.add_argument("--out", required=True, type=Path, help="output directory")
    s.add_argument("--threads", type=_positive_int, default=1, help="worker processes (default 1)")

    g = sub.add_parser("gen-instance", help="draw a random instance and write it as JSON")
    g.add_argument("--n", required=True, type=_positive_int, help="number of products N")
    g.add_argument("--k", required=True, type=_nonnegative_int, help="cardinality limit K")
    g.add_argument("--seed", required=True, type=_nonnegative_int, help="master seed")
    g.add_argument("--index", type=_nonnegative_int, default=0,
                   help="instance index under the seed (default 0, as in experiments)")
    g.add_argument("--out", required=True, type=Path, help="instance file to write")

    e = sub.add_parser("eval-risk", help="evaluate a criterion on a distribution file")
    e.add_argument("--criterion", required=True, type=_criterion, help="criterion, e.g. cvar:0.05")
    e.add_argument("--dist", required=True, type=Path, help="JSON array of [payoff, mass] pairs")

    b = sub.add_parser("best-assortment", help="risk-optimal assortment of an instance")
    b.add_argument("--instance", required=True, type=Path, help="instance file (JSON)")
    b.add_argument("--criterion", required=True, type=_criterion, help="criterion, e.g. mean")
    b.add_argument("--local", action="store_true", help="local search from the empty set instead of enumeration")

    v = sub.add_parser("verify", help="run a randomised property suite")
    v.add_argument("--suite", required=True, choices=sorted(SUITES), help="suite name")
    v.add_argument("--seed", type=_nonnegative_int, default=None, help="seed of the random draws")
    return p


def _format_set(ids) -> str:
    return "{" + ", ".join(str(i) for i in sorted(ids)) + "}"


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise CommandError(f"{path} is not valid JSON: {exc}") from None


def cmd_simulate(args) -> int:
    if not args.config.is_file():
        raise CommandError(f"config file {args.config} not found")
    try:
        cfg = ExperimentConfig.load(args.config)
    except TypeError as exc:
        # wrongly typed config values surface as comparison errors
        raise CommandError(f"invalid config {args.config}: {exc}") from None
    result = run_experiment(cfg, threads=args.threads)
    for path in write_results(result, args.out):
        print(path)
    return 0


def cmd_gen_instance(args) -> int:
    if args.k > args.n:
        raise CommandError(f"--k {args.k} exceeds --n {args.n}")
    inst = generate_instance(args.n, args.k, stream(args.seed, 0, args.index))
    inst.save(args.out)
    print(args.out)
    return 0


def cmd_eval_risk(args) -> int:
    data = _read_json(args.dist)
    if not isinstance(data, list) or not all(isinstance(a, list) and len(a) == 2 for a in data):
        raise CommandError("distribution file must be a JSON array of [payoff, mass] pairs")
    F = RewardDistribution.from_atoms(data)
    print(repr(evaluate(args.criterion, F)))
    return 0


def cmd_best_assortment(args) -> int:
    inst = Instance.from_json(_read_json(args.instance))
    v, r, k = inst.preferences, inst.profits, inst.cardinality_limit
    if args.local:
        res = optimize_local(v, r, k, args.criterion, init=())
    else:
        res = optimize_exact(v, r, k, args.criterion)
    print(_format_set(res.assortment))
    print(repr(res.value))
    return 0


def cmd_verify(args) -> int:
    report = run_suite(args.suite, args.seed)
    for line in report.lines():
        print(line)
    if not report.passed:
        print(f"suite {args.suite} failed", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "gen-instance": cmd_gen_instance,
    "eval-risk": cmd_eval_risk,
    "best-assortment": cmd_best_assortment,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (CommandError, ValueError, OSError) as exc:
        print(f"riskmnl {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
