"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 when ``verify``
finds violations or ``experiment`` finds counterexamples.
"""
import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import OmpSparseError
from .guarantees import evaluate_guarantees, parse_noise, rip_order
from .harness import ExperimentConfig, run_experiment
from .omp import SparseSignal, omp_run, parse_rule
from .oracle import LEMMAS, run_lemma_suite, run_selection_suite
from .sensing import (DEFAULT_BUDGET, load_matrix_csv, load_vector_csv,
                      normalize_columns, rip_exact)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_FOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(obj, path):
    text = json.dumps(obj, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_matrix(path, normalize):
    raw = load_matrix_csv(path)
    return normalize_columns(raw) if normalize else _as_sense(raw, path)


def _as_sense(raw, path):
    from .sensing import SenseMatrix
    try:
        return SenseMatrix(raw)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc} (pass --normalize to rescale columns)")


def cmd_certify(args):
    A = _load_matrix(args.matrix, args.normalize)
    cert = rip_exact(A, args.order, budget=args.budget)
    _emit(cert.to_dict(), args.output)
    return EXIT_OK


def cmd_solve(args):
    A = _load_matrix(args.matrix, args.normalize)
    y = load_vector_csv(args.y)
    try:
        rule = parse_rule(args.rule)
    except ValueError as exc:
        raise UsageError(str(exc))
    trace = omp_run(A, y, rule, max_iterations=args.max_iterations)
    _emit(trace.to_dict(), args.output)
    return EXIT_OK


def cmd_check(args):
    try:
        noise = parse_noise(args.noise)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.signal:
        signal = SparseSignal.from_dense(load_vector_csv(args.signal))
    elif args.K is not None and args.min_coeff is not None:
        signal = SparseSignal(args.K, tuple(range(args.K)), (args.min_coeff,) * args.K)
    else:
        raise UsageError("check needs --signal or both -K and --min-coeff")
    reports = evaluate_guarantees(args.delta, signal, noise, args.m,
                                  delta_source=args.delta_source)
    _emit([r.to_dict() for r in reports], args.output)
    return EXIT_OK


def cmd_verify(args):
    lemmas = list(LEMMAS) + ["3.2"] if args.lemma == "all" else [args.lemma]
    results = []
    for lemma in lemmas:
        if lemma == "3.2":
            res = run_selection_suite(args.samples, args.seed)
            res.pop("traces")
            results.append({"lemma": "3.2", "checks_run": res["steps_with_condition"],
                            "violations": res["counterexamples"],
                            "instances": res["instances_run"],
                            "instances_with_condition": res["instances_with_condition"]})
        else:
            results.append(run_lemma_suite(lemma, args.samples, args.seed))
    _emit(results[0] if len(results) == 1 else results, args.output)
    return EXIT_FOUND if any(r["violations"] for r in results) else EXIT_OK


def cmd_experiment(args):
    try:
        config = ExperimentConfig.from_json(args.config)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{args.config}: {exc}")
    summary, _ = run_experiment(config, args.csv, args.summary)
    if not args.summary:
        _emit(summary, None)
    return EXIT_FOUND if summary["counterexample_count"] else EXIT_OK


def build_parser():
    p = _Parser(prog="omp-sparse",
                description="OMP sparse recovery with exact RIP certification.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("certify", help="exact restricted isometry constant")
    c.add_argument("--matrix", required=True, help="matrix CSV")
    c.add_argument("--order", type=int, required=True, help="order K")
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    c.add_argument("--normalize", action="store_true",
                   help="rescale columns to unit norm instead of rejecting")
    c.add_argument("--output", "-o")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("solve", help="run OMP and print the trace")
    s.add_argument("--matrix", required=True)
    s.add_argument("--y", required=True, help="measurement CSV (one column)")
    s.add_argument("--rule", required=True, help="fixed:K | l2:B2 | linf:Binf")
    s.add_argument("--max-iterations", type=int)
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_solve)

    k = sub.add_parser("check", help="evaluate recovery hypotheses")
    k.add_argument("--delta", type=float, required=True,
                   help="isometry constant of order K+1")
    k.add_argument("--noise", required=True, help="l2:B2 | linf:Binf | gaussian:sigma")
    k.add_argument("--m", type=int, default=2, help="measurements (Gaussian bound)")
    k.add_argument("-K", type=int, help="sparsity (with --min-coeff)")
    k.add_argument("--min-coeff", type=float, help="smallest nonzero magnitude")
    k.add_argument("--signal", help="signal CSV instead of -K/--min-coeff")
    k.add_argument("--delta-source", default="exact", choices=["exact", "upper_bound"])
    k.add_argument("--output", "-o")
    k.set_defaults(func=cmd_check)

    v = sub.add_parser("verify", help="randomized lemma suites")
    v.add_argument("--lemma", required=True, choices=list(LEMMAS) + ["3.2", "all"])
    v.add_argument("--samples", type=int, default=10000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--output", "-o")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="Monte Carlo experiment from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--csv", help="per-trial CSV output")
    e.add_argument("--summary", help="summary JSON output (default: stdout)")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        if not str(exc).startswith(parser.prog):
            parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (OmpSparseError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"omp-sparse: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
