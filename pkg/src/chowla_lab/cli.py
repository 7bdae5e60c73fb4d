"""
Command-line front end.

Usage:
    chowla-lab correlate --x 1000000 --shifts 0,1 --out c.csv
    chowla-lab correlate --x 100000 --shifts 0,1 --function lambda_r --r 100
    chowla-lab charsum --poly 0:1,1:1 --primes-up-to 10000
    chowla-lab charsum --poly 0:1,1:1 --discriminant -15
    chowla-lab snf-solve --a 2,3 --h 1
    chowla-lab sieve-count --x 1000000 --primes-up-to 20
    chowla-lab moment --x 100000 --m 20 --eps 0.6 --k 4
    chowla-lab scan --x 1000,10000 --shifts "0;0,1" --eta-proxy 1e6
    chowla-lab selftest

Exit status is 0 on success, 2 on a usage error and 1 on any other failure.
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .arith import SieveTable, build_sieve_table, is_prime_trial, primes_up_to
from .characters import (
    LinearFactorPoly,
    char_sum_poly,
    crt_char_sum,
    is_square_mod_p,
    legendre_character,
    real_primitive_character,
    weil_bound_check,
)
from .config import DEFAULT_DISCRIMINANT, LabSettings
from .diophantine import DiophantineSystem, SnfMode, minimal_positive_particular, solve_system
from .errors import ChowlaLabError, UsageError
from .experiments import (
    SCAN_COLUMNS,
    ArithFunction,
    correlation_cell,
    correlation_scan,
    moment_tail_experiment,
)
from .output import FORMATS, RunManifest, document_digest, table_digest, to_frame, write_document, write_table
from .selftest import all_passed, format_results, run_selftest
from .sieve import flst_check, uniform_problem
from .tracking import PerformanceTracker

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

CHARSUM_COLUMNS = ["q", "poly", "sum", "bound", "holds"]
SIEVE_COLUMNS = ["problem-id", "u", "main", "s_exact", "remainder_budget", "holds", "measured_constant"]
MOMENT_COLUMNS = [
    "x",
    "m",
    "k",
    "eps",
    "count",
    "moment",
    "majorant",
    "chebyshev_bound",
    "combinatorial_bound",
    "analytic_bound",
    "holds",
]
SELFTEST_COLUMNS = ["check", "passed", "detail", "elapsed_ms"]
DEFAULT_SIEVE_U = (1.0, 2.0, 3.0)


@dataclass
class Emitted:
    """What a subcommand produced: a table, or a single JSON document."""

    rows: list[dict[str, Any]] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)
    document: dict[str, Any] | None = None
    ok: bool = True
    # tables go to stdout only when this is set or --out is given
    print_table: bool = True


# argument types


def int_list(text: str) -> tuple[int, ...]:
    """'0,1,2' -> (0, 1, 2); the empty string gives ()."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def distinct_shifts(text: str) -> tuple[int, ...]:
    shifts = int_list(text)
    if not shifts:
        raise argparse.ArgumentTypeError("need at least one shift")
    if len(set(shifts)) != len(shifts):
        raise argparse.ArgumentTypeError(f"shifts must be distinct, got {text!r}")
    if min(shifts) < 0:
        raise argparse.ArgumentTypeError(f"shifts must be non-negative, got {text!r}")
    return shifts


def shifts_grid(text: str) -> tuple[tuple[int, ...], ...]:
    """'0;0,1;0,2' -> ((0,), (0, 1), (0, 2))."""
    return tuple(distinct_shifts(cell) for cell in text.split(";") if cell.strip())


def float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def linear_poly(text: str) -> LinearFactorPoly:
    try:
        return LinearFactorPoly.parse(text)
    except (ChowlaLabError, ValueError) as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# subcommands


def _table_for(limit: int, settings: LabSettings) -> SieveTable:
    return build_sieve_table(max(limit, 2), settings)


def cmd_correlate(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    f = ArithFunction(args.function)
    if f is ArithFunction.LAMBDA_R and args.r is None and args.eta_proxy is None:
        raise UsageError("--function lambda_r needs --r or --eta-proxy")
    table = _table_for(args.x + max(args.shifts), settings)
    tracker.probe("table")
    row = correlation_cell(
        table,
        args.x,
        args.shifts,
        f,
        args.discriminant,
        args.eta_proxy,
        args.r,
        u=args.u,
        A=args.A,
        threads=settings.threads,
    )
    tracker.probe("correlation")
    return Emitted(rows=[asdict(row)], columns=SCAN_COLUMNS)


def cmd_charsum(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    f = args.poly
    rows = []
    if args.primes_up_to is not None:
        table = _table_for(args.primes_up_to, settings)
        tracker.probe("table")
        for p in primes_up_to(table, args.primes_up_to).tolist():
            if p == 2:
                continue
            chi = legendre_character(p)
            if is_square_mod_p(f, p):
                rows.append({"q": p, "poly": str(f), "sum": char_sum_poly(chi, f), "bound": None, "holds": None})
                continue
            report = weil_bound_check(chi, f)
            rows.append(
                {"q": p, "poly": str(f), "sum": report.char_sum, "bound": report.bound, "holds": report.holds}
            )
    else:
        report = crt_char_sum(real_primitive_character(args.discriminant), f)
        rows.append(
            {
                "q": report.modulus,
                "poly": str(f),
                "sum": report.direct_sum,
                "bound": report.bound,
                "holds": report.holds,
            }
        )
    tracker.probe("sums")
    return Emitted(rows=rows, columns=CHARSUM_COLUMNS)


def cmd_snf_solve(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    system = DiophantineSystem.of(args.a, args.h)
    outcome = solve_system(system, SnfMode(args.mode))
    tracker.probe("solve")
    document: dict[str, Any] = {
        "solvable": outcome.solvable,
        "particular": None,
        "step": None,
        "lcm": outcome.lcm,
        "necessary_condition": outcome.necessary_condition,
    }
    if outcome.family is not None:
        family = minimal_positive_particular(outcome.family)
        document["particular"] = list(family.particular)
        document["step"] = list(family.step)
    return Emitted(document=document)


def cmd_sieve_count(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    limit = args.primes_up_to
    primes = [p for p in range(2, limit + 1) if is_prime_trial(p)]
    problem = uniform_problem(args.x, primes)
    rows = []
    for u in args.u or DEFAULT_SIEVE_U:
        check = flst_check(problem, u)
        rows.append(
            {
                "problem-id": check.label,
                "u": u,
                "main": check.estimate.main,
                "s_exact": check.s_exact,
                "remainder_budget": check.estimate.remainder_budget,
                "holds": check.holds,
                "measured_constant": check.measured_constant,
            }
        )
        tracker.probe(f"u={u:g}")
    return Emitted(rows=rows, columns=SIEVE_COLUMNS)


def cmd_moment(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    if args.coeffs is not None and len(args.coeffs) != args.m:
        raise UsageError(f"--coeffs: need {args.m} coefficients, got {len(args.coeffs)}")
    table = _table_for(args.x + args.m, settings)
    tracker.probe("table")
    report = moment_tail_experiment(
        table, args.x, args.m, args.eps, coeffs=args.coeffs, k=args.k, threads=settings.threads
    )
    tracker.probe("moment")
    row = {name: getattr(report, name) for name in MOMENT_COLUMNS}
    return Emitted(rows=[row], columns=MOMENT_COLUMNS)


def cmd_scan(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    f = ArithFunction(args.function)
    if f is ArithFunction.LAMBDA_R and args.r is None and args.eta_proxy is None:
        raise UsageError("--function lambda_r needs --r or --eta-proxy")
    rows = []
    if args.x and args.shifts:
        top = max(args.x) + max(max(s) for s in args.shifts)
        table = _table_for(top, settings)
        tracker.probe("table")
        rows = correlation_scan(
            table,
            args.x,
            args.shifts,
            f,
            args.discriminant,
            args.eta_proxy,
            args.r,
            threads=settings.threads,
        )
        tracker.probe("scan")
    return Emitted(rows=[asdict(r) for r in rows], columns=SCAN_COLUMNS)


def cmd_selftest(args, settings: LabSettings, tracker: PerformanceTracker) -> Emitted:
    results = run_selftest()
    tracker.probe("checks")
    for line in format_results(results):
        print(line)
    rows = [
        {"check": r.name, "passed": r.passed, "detail": r.detail, "elapsed_ms": r.seconds * 1000}
        for r in results
    ]
    return Emitted(rows=rows, columns=SELFTEST_COLUMNS, ok=all_passed(results), print_table=False)


# parser


def _add_common(parser: argparse.ArgumentParser, table: bool = True) -> None:
    parser.add_argument("--out", type=Path, default=None, help="Output file (default: stdout)")
    parser.add_argument("--format", choices=FORMATS, default="csv", help="Output format (default: csv)")
    parser.add_argument("--threads", type=positive_int, default=None, help="Worker threads (default: 1)")
    if table:
        parser.add_argument(
            "--table-limit",
            type=positive_int,
            default=None,
            help="Largest sieve table allowed (default: $CHOWLA_LAB_TABLE_LIMIT or 10^8)",
        )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")


def _add_parameterization(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--discriminant",
        type=int,
        default=DEFAULT_DISCRIMINANT,
        help=f"Fundamental discriminant of the real character (default: {DEFAULT_DISCRIMINANT})",
    )
    parser.add_argument(
        "--function",
        choices=[f.value for f in ArithFunction],
        default=ArithFunction.LAMBDA.value,
        help="Function to correlate (default: lambda)",
    )
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--r", type=positive_int, default=None, help="Smoothness bound r, set directly")
    group.add_argument("--eta-proxy", type=float, default=None, help="eta stand-in deriving r, u and A_x")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chowla-lab",
        description="Desk-scale experiments on Liouville correlations, character sums, "
        "sieve counts and Smith normal form parametrizations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlate", help="Exact k-point correlation sum")
    p.add_argument("--x", type=positive_int, required=True, help="Summation limit")
    p.add_argument("--shifts", type=distinct_shifts, required=True, help="Distinct shifts, e.g. 0,1")
    _add_parameterization(p)
    p.add_argument("--u", type=float, default=None, help="Override the derived u")
    p.add_argument("--A", type=float, default=None, help="Override the derived A_x")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("charsum", help="Character sums over complete residue systems")
    p.add_argument("--poly", type=linear_poly, default=linear_poly("0:1,1:1"), help="Factors b:a,b:a,...")
    p.add_argument("--discriminant", type=int, default=DEFAULT_DISCRIMINANT, help="Character discriminant")
    p.add_argument(
        "--primes-up-to", type=positive_int, default=None, help="One Weil check per odd prime up to N"
    )
    _add_common(p)
    p.set_defaults(func=cmd_charsum)

    p = sub.add_parser("snf-solve", help="Solve a_i b_i = a_0 b_0 + h_i through the Smith normal form")
    p.add_argument("--a", type=int_list, required=True, help="Coefficients a_0,...,a_k")
    p.add_argument("--h", type=int_list, required=True, help="Shifts h_1,...,h_k")
    p.add_argument("--mode", choices=[m.value for m in SnfMode], default=SnfMode.CANONICAL.value)
    _add_common(p, table=False)
    p.set_defaults(func=cmd_snf_solve)

    p = sub.add_parser("sieve-count", help="Fundamental-lemma check on [1, x]")
    p.add_argument("--x", type=positive_int, required=True, help="Interval end")
    p.add_argument("--primes-up-to", type=positive_int, default=20, help="Sieving primes bound (default: 20)")
    p.add_argument("--u", type=float_list, default=None, help="Level exponents (default: 1,2,3)")
    _add_common(p, table=False)
    p.set_defaults(func=cmd_sieve_count)

    p = sub.add_parser("moment", help="Threshold count against the Chebyshev majorant")
    p.add_argument("--x", type=positive_int, required=True)
    p.add_argument("--m", type=positive_int, required=True, help="Window length")
    p.add_argument("--eps", type=float, required=True, help="Threshold")
    p.add_argument("--k", type=positive_int, default=None, help="Even moment (default: closest to eps^2 m / 4e)")
    p.add_argument("--coeffs", type=float_list, default=None, help="c_1,...,c_m with |c_i| <= 1")
    _add_common(p)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("scan", help="Correlation grid over x values and shift tuples")
    p.add_argument("--x", type=int_list, required=True, help="Ascending x values, e.g. 1000,10000")
    p.add_argument("--shifts", type=shifts_grid, required=True, help="Shift tuples separated by ';'")
    _add_parameterization(p)
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("selftest", help="Reduced-scale invariant suite")
    _add_common(p, table=False)
    p.set_defaults(func=cmd_selftest)

    return parser


# driver


def _parameters(args) -> dict[str, Any]:
    params = {}
    for key, value in vars(args).items():
        if key == "func":
            continue
        if isinstance(value, (Path, LinearFactorPoly)):
            value = str(value)
        elif isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        params[key] = value
    return params


def _emit(args, emitted: Emitted, tracker: PerformanceTracker) -> RunManifest:
    manifest = RunManifest(subcommand=args.command, parameters=_parameters(args))
    if emitted.document is not None:
        write_document(emitted.document, args.out)
        manifest.digest = document_digest(emitted.document)
        manifest.rows = 1
    else:
        frame = to_frame(emitted.rows, emitted.columns)
        if args.out is not None or emitted.print_table:
            write_table(frame, args.out, args.format)
        manifest.digest = table_digest(frame)
        manifest.rows = len(frame)
    tracker.probe("write")
    return manifest


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT)

    try:
        settings = LabSettings.from_env(
            table_limit=getattr(args, "table_limit", None), threads=args.threads
        )
        if args.format == "parquet" and args.out is None:
            raise UsageError("--format parquet needs --out")
        with PerformanceTracker(args.command) as tracker:
            emitted = args.func(args, settings, tracker)
            manifest = _emit(args, emitted, tracker)
        manifest.timings = tracker.timings()
        if args.out is not None:
            manifest.output = str(args.out)
            manifest.save_json(args.out)
        else:
            # stdout carries the table, so the manifest goes to stderr as one line
            print(manifest.to_json(indent=None), file=sys.stderr)
        for line in tracker.summary_lines():
            logger.debug(line)
    except UsageError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except ChowlaLabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0 if emitted.ok else 1


def main(argv: list[str] | None = None) -> int:
    return run(argv)

