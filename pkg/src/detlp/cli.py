"""``detlp`` command line: solve, gen, oracle, bench.

Exit codes: 0 success, 2 parse/validation error, 3 numerical failure,
4 iteration cap reached, 5 verification failure.
"""

import argparse
import json
import sys
import warnings

from .bench import run_bench
from .central_path import PathParams
from .errors import (
    DomainError,
    IterationLimitError,
    NonFiniteError,
    PotentialRangeError,
    RankError,
    SchemaError,
    ShapeError,
    SingularMatrixError,
    SizeError,
    StepFailure,
    VerificationError,
)
from .instances import dump_instance, generate_instance, parse_instance
from .oracle import brute_force_lp
from .report import run_solve

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4, 5

_INPUT_ERRORS = (SchemaError, ShapeError, NonFiniteError, RankError, DomainError, SizeError, OSError)
_NUMERIC_ERRORS = (SingularMatrixError, StepFailure, PotentialRangeError)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path):
    if path == "-":
        return parse_instance(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def cmd_solve(args):
    inst = _load(args.instance)
    n_bar = inst.n + 2
    params = PathParams.preset_for(
        args.preset, n_bar, delta=args.delta, a=args.a, strategy=args.strategy,
        verify=args.verify, max_iterations=args.max_iters,
    )
    report = run_solve(inst, params, trace=args.trace, timing=not args.no_timing)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_gen(args):
    _emit(dump_instance(generate_instance(args.n, args.d, args.seed)), args.out)
    return EXIT_OK


def cmd_oracle(args):
    inst = _load(args.instance)
    res = brute_force_lp(inst.A, inst.b, inst.c)
    doc = {"status": res.status}
    if res.status == "optimal":
        doc.update(value=res.value, x=res.x.tolist(), basis=list(res.basis))
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_bench(args):
    rows = run_bench(
        repeats=args.repeats, workers=args.workers, n=args.n, steps=args.steps, C=args.drift,
        eps_mp=args.eps_mp, seed=args.seed, strategy=args.strategy, a=args.a,
    )
    _emit(json.dumps(rows, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="detlp", description="Deterministic interior-point LP solver.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve an instance document")
    s.add_argument("instance", help="instance JSON path, or - for stdin")
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--preset", choices=("paper", "relaxed"), default="paper")
    s.add_argument("--a", type=float, default=0.6667)
    s.add_argument("--strategy", choices=("grow", "pow2"), default="grow")
    s.add_argument("--verify", action="store_true", help="enforce per-iteration checks and oracle cross-check")
    s.add_argument("--trace", action="store_true", help="include the per-iteration trace")
    s.add_argument("--max-iters", type=int, default=50_000_000)
    s.add_argument("--seed", type=int, default=0, help="accepted for uniformity; solve is deterministic")
    s.add_argument("--no-timing", action="store_true", help="report wall_time_ms as 0 (byte-stable output)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="generate a feasible instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="brute-force optimum (n <= 24)")
    o.add_argument("instance")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="amortized rebuild counters on synthetic drift")
    b.add_argument("--n", type=int, default=64)
    b.add_argument("--steps", type=int, default=2000)
    b.add_argument("--drift", type=float, default=0.01, help="per-step relative l2 drift C")
    b.add_argument("--eps-mp", type=float, default=0.05)
    b.add_argument("--a", type=float, default=0.6667)
    b.add_argument("--strategy", choices=("grow", "pow2"), default="pow2")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=1)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, cat, *rest: print(f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IterationLimitError as exc:
        print(f"iteration cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
