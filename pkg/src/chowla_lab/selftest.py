"""
Reduced-scale run of the invariant suite, used by `chowla-lab selftest`.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arith import SieveTable, build_sieve_table, primes_up_to, summatory_liouville, trial_factorize
from .characters import (
    LinearFactorPoly,
    char_sum_poly,
    is_square_mod_p,
    legendre_character,
    real_primitive_character,
    weil_bound_check,
)
from .diophantine import DiophantineSystem, brute_force_solutions, solve_system
from .errors import ChowlaLabError
from .experiments import (
    ArithFunction,
    chowla_correlation,
    correlation_difference,
    even_multiplicity_tuple_count,
    moment_tail_experiment,
)
from .sieve import CongruenceFamily, direct_root_count, flst_check, nu_p, uniform_problem

logger = logging.getLogger(__name__)

SELFTEST_TABLE_LIMIT = 200_000
SELFTEST_SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _character_identity(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    f = LinearFactorPoly.of((0, 1), (1, 1))
    primes = [int(p) for p in primes_up_to(table, 1000) if p > 2]
    bad = [p for p in primes if char_sum_poly(legendre_character(p), f) != -1]
    return not bad, f"{len(primes)} primes, failures {bad[:5]}"


def _weil(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    primes = [int(p) for p in primes_up_to(table, 2000) if p > 2]
    checked = violations = 0
    while checked < 100:
        p = primes[rng.integers(len(primes))]
        degree = int(rng.integers(1, 6))
        f = LinearFactorPoly(
            tuple((int(rng.integers(0, p)), int(rng.integers(1, p))) for _ in range(degree))
        )
        if is_square_mod_p(f, p):
            continue
        checked += 1
        violations += not weil_bound_check(legendre_character(p), f).holds
    return violations == 0, f"{checked} instances, {violations} violations"


def _diophantine(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    mismatches = 0
    for _ in range(100):
        k = int(rng.integers(1, 5))
        system = DiophantineSystem.of(
            rng.integers(1, 31, size=k + 1).tolist(), rng.integers(-20, 21, size=k).tolist()
        )
        outcome = solve_system(system)
        expected = brute_force_solutions(system, -1000, 1000)
        found = outcome.family.members_in_box(-1000, 1000) if outcome.family else []
        mismatches += found != expected
    return mismatches == 0, f"100 systems, {mismatches} mismatches"


def _nu(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    primes = [int(p) for p in primes_up_to(table, 50)]
    mismatches = 0
    for _ in range(100):
        family = CongruenceFamily.of(rng.integers(-50, 51, size=(3, 2)).tolist())
        for p in primes:
            mismatches += nu_p(family, p).count != direct_root_count(family.factors, p)
    return mismatches == 0, f"100 families x {len(primes)} primes, {mismatches} mismatches"


def _flst(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    problem = uniform_problem(10_000, [2, 3, 5, 7, 11, 13, 17, 19])
    checks = [flst_check(problem, u) for u in (1, 2, 3)]
    worst = max(c.measured_constant for c in checks)
    return all(c.holds for c in checks), f"S = {checks[0].s_exact}, worst constant {worst:.3g}"


def _pnt(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    x = 10_000
    oracle = sum(
        -1 if sum(trial_factorize(n).values()) % 2 else 1 for n in range(1, x + 1)
    )
    total = summatory_liouville(table, x)
    return total == oracle, f"L({x}) = {total}, oracle {oracle}"


def _moment(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    report = moment_tail_experiment(table, 10_000, 8, 0.6, k=4)
    return bool(report.holds), f"count {report.count}, majorant {report.majorant}"


def _tuples(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    failures = [
        (m, k)
        for k in (2, 4)
        for m in range(k, 9)
        if not (c := even_multiplicity_tuple_count(m, k)).within_bound or c.enumerated != c.exact
    ]
    return not failures, f"failures {failures}"


def _lambda_r(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    report = correlation_difference(table, real_primitive_character(-4), 100, 10_000, (0, 1))
    return report.holds, f"lhs {report.lhs}, majorant {report.majorant}"


def _determinism(table: SieveTable, rng: np.random.Generator) -> tuple[bool, str]:
    sums = {
        threads: chowla_correlation(table, ArithFunction.LAMBDA, 100_000, (0, 1), threads=threads).raw_sum
        for threads in (1, 4)
    }
    return len(set(sums.values())) == 1, f"raw sums {sums}"


CHECKS: list[tuple[str, Callable[[SieveTable, np.random.Generator], tuple[bool, str]]]] = [
    ("x(x+1) character sum = -1", _character_identity),
    ("Weil bound", _weil),
    ("SNF solutions = brute force", _diophantine),
    ("nu(p) case analysis = direct count", _nu),
    ("FLST with constant 10", _flst),
    ("L(x) against trial division", _pnt),
    ("Chebyshev chain", _moment),
    ("even-multiplicity tuples", _tuples),
    ("lambda_r reduction", _lambda_r),
    ("thread-count determinism", _determinism),
]


def run_selftest(seed: int = SELFTEST_SEED) -> list[CheckResult]:
    table = build_sieve_table(SELFTEST_TABLE_LIMIT)
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            passed, detail = check(table, rng)
        except ChowlaLabError as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - start
        logger.debug("selftest %s: %s (%.2fs)", name, passed, elapsed)
        results.append(CheckResult(name=name, passed=passed, detail=detail, seconds=elapsed))
    return results


def format_results(results: list[CheckResult]) -> list[str]:
    lines = ["=" * 70, "chowla-lab selftest", "=" * 70]
    for r in results:
        mark = "✅" if r.passed else "❌"
        lines.append(f"{mark} {r.name:<40} {r.seconds:>7.2f}s  {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append("=" * 70)
    lines.append(f"{passed}/{len(results)} checks passed")
    return lines


def all_passed(results: list[CheckResult]) -> bool:
    return all(r.passed for r in results)
