"""Command-line front end.

Usage::

    choreogame analyze  INSTANCE [--coalition O1,O2] [--alpha-override A]
    choreogame value    INSTANCE [--coalition ...]
    choreogame schedule INSTANCE [--coalition ...]
    choreogame verify   INSTANCE --imputation 9,9 [--coalition ...] [--epsilon E]

A JSON report goes to stdout, a short summary to stderr. Exit codes:
0 feasible/stable, 1 usage or input error, 2 solver failure,
3 infeasible alliance or stability violation.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .game import GameCache, detect_alliance
from .instance import InstanceError, load_instance, parse_coalition
from .oracles import SizeLimitError, SolverError
from .stability import stability_report

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite number in report: {obj}")
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if hasattr(obj, "item"):          # numpy scalars
        return dumps(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("instance", help="instance JSON file")
    common.add_argument("--coalition", help="comma-separated organization ids (default: all)")
    common.add_argument("--alpha-override", type=float, help="replace the instance's alpha")
    common.add_argument("--tol", type=float, default=1e-9, help="convex solver relative tolerance")
    common.add_argument("--eq-tol", type=float, help="absolute tolerance for value equality")
    common.add_argument("--epsilon", type=float, default=1e-2,
                        help="margin for strict inequalities in the objection search")
    common.add_argument("--no-migration", action="store_true",
                        help="integral loads for common-deadline energy instances")
    common.add_argument("--seed", type=int, help="recorded in the report; for randomized runs")
    common.add_argument("--workers", type=int, default=1, help="threads for leave-one-out costs")

    parser = _Parser(prog="choreogame", description="Alliance detection for the "
                     "multi-organization scheduling pricing game.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analyze", parents=[common], help="detect an alliance and its payments")
    sub.add_parser("value", parents=[common], help="price, cost and value of a coalition")
    sub.add_parser("schedule", parents=[common], help="optimal schedule of a coalition")
    verify = sub.add_parser("verify", parents=[common], help="check a payment vector")
    verify.add_argument("--imputation", required=True,
                        help="comma-separated payments, one per coalition member")
    return parser


def _load(args):
    try:
        inst = load_instance(args.instance)
    except OSError as exc:
        raise UsageError(f"cannot read {args.instance}: {exc.strerror}") from None
    if args.alpha_override is not None:
        if not args.alpha_override > 1:
            raise UsageError("alpha must exceed 1")
        inst = inst.with_alpha(args.alpha_override)
    S = parse_coalition(args.coalition, inst)
    return inst, S


def _summary_x(inst, S, x):
    return ", ".join(f"{inst.organizations[k].id}={x[k]:.6g}" for k in S)


def run(args) -> tuple:
    """Execute a parsed command; returns (exit code, report dict)."""
    inst, S = _load(args)
    game = GameCache(inst, tol=args.tol, no_migration=args.no_migration, eq_tol=args.eq_tol)
    ids = [o.id for o in inst.organizations]
    code = EXIT_OK

    if args.command == "analyze":
        rep = detect_alliance(game, S, workers=args.workers)
        payload = rep.to_dict()
        if not rep.feasible:
            code = EXIT_VIOLATION
            print(f"no stable alliance for {[ids[k] for k in S]} "
                  f"(gate: {rep.failed_gate}, violating: {[ids[k] for k in rep.violating]})",
                  file=sys.stderr)
        else:
            print(f"alliance feasible; v(S)={rep.grand_value:.6g}; "
                  f"payments: {_summary_x(inst, S, rep.imputation)}", file=sys.stderr)
    elif args.command == "value":
        payload = {"coalition": [ids[k] for k in S], **game.table(S)}
        print(f"p={payload['price']:.6g} Cost={payload['cost']:.6g} v={payload['value']:.6g}",
              file=sys.stderr)
    elif args.command == "schedule":
        out = game.outcome(S)
        payload = {"coalition": [ids[k] for k in S], **out.to_dict()}
        print(f"{out.method}: total cost {out.total_cost:.6g}", file=sys.stderr)
    else:
        try:
            values = [float(v) for v in args.imputation.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad imputation vector {args.imputation!r}") from None
        if len(values) != len(S):
            raise UsageError(f"imputation has {len(values)} entries, coalition has {len(S)}")
        x = [0.0] * inst.n
        for k, val in zip(S, values):
            x[k] = val
        rep = stability_report(game, S, x, args.epsilon)
        payload = {"imputation": x, **rep.to_dict()}
        if not (rep.stable and rep.conditions_ok):
            code = EXIT_VIOLATION
        print(f"stable={rep.stable} conditions_ok={rep.conditions_ok}", file=sys.stderr)

    report = {
        "command": args.command,
        "version": __version__,
        "instance": {"n": inst.n, "objective": inst.objective.value, "alpha": inst.alpha,
                     "organizations": ids},
        "parameters": {"coalition": [ids[k] for k in S], "tol": args.tol,
                       "eq_tol": game.eq_tol(S), "epsilon": args.epsilon,
                       "no_migration": args.no_migration, "seed": args.seed},
        "payload": payload,
    }
    return code, report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, report = run(args)
    except (UsageError, InstanceError, SizeLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc} (best value {exc.best_value}, gap {exc.gap})",
              file=sys.stderr)
        return EXIT_SOLVER
    sys.stdout.write(dumps(report) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
