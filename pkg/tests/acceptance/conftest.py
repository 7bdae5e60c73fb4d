"""
Pytest configuration and fixtures for the acceptance criteria.
"""

from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import pytest

from chowla_lab.arith import SieveTable, build_sieve_table
from chowla_lab.config import LabSettings
from chowla_lab.tracking import PerformanceTracker

from .results import CriterionResult, ResultCollector, flush_memory

SEED = 20240611


@dataclass(frozen=True)
class AcceptanceScale:
    """Problem sizes for one run of the criteria."""

    name: str
    charsum_prime_limit: int
    weil_instances: int
    snf_systems: int
    snf_box: int
    nu_families: int
    nu_prime_limit: int
    nu_d_families: int
    nu_d_limit: int
    flst_x: int
    pnt_xs: tuple[int, ...]
    moment_x: int
    moment_m: int
    tuple_formula_m: int
    lambda_r_x: int
    determinism_x: int


FULL = AcceptanceScale(
    name="full",
    charsum_prime_limit=10_000,
    weil_instances=500,
    snf_systems=1000,
    snf_box=10_000,
    nu_families=1000,
    nu_prime_limit=200,
    nu_d_families=10,
    nu_d_limit=10_000,
    flst_x=10**6,
    pnt_xs=(10**4, 10**5, 10**6, 10**7),
    moment_x=10**5,
    moment_m=20,
    tuple_formula_m=1000,
    lambda_r_x=10**5,
    determinism_x=10**6,
)

REDUCED = AcceptanceScale(
    name="reduced",
    charsum_prime_limit=2000,
    weil_instances=100,
    snf_systems=100,
    snf_box=2000,
    nu_families=100,
    nu_prime_limit=200,
    nu_d_families=2,
    nu_d_limit=2000,
    flst_x=10**5,
    pnt_xs=(10**4, 10**5, 10**6),
    moment_x=10**4,
    moment_m=12,
    tuple_formula_m=100,
    lambda_r_x=10**5,
    determinism_x=10**5,
)

SCALES = {s.name: s for s in (FULL, REDUCED)}


@pytest.fixture(scope="session")
def scale(request) -> AcceptanceScale:
    return SCALES[request.config.getoption("--acceptance-scale")]


@pytest.fixture(scope="session")
def data_dir(scale) -> Path:
    """Directory for the results JSON and the HTML report."""
    return Path(__file__).parent.parent / "data" / "acceptance" / scale.name


@pytest.fixture(scope="session")
def result_collector(scale, data_dir) -> ResultCollector:
    """Session collector; writes acceptance_results.json at teardown."""
    collector = ResultCollector(scale=scale.name)
    yield collector
    collector.save_json(data_dir / "acceptance_results.json")


@pytest.fixture(scope="session")
def acceptance_table(scale) -> SieveTable:
    """One spf table covering every criterion at this scale."""
    limit = max(max(scale.pnt_xs), scale.determinism_x + 2, scale.lambda_r_x + 2, 200_000)
    return build_sieve_table(limit, LabSettings(table_limit=limit))


@pytest.fixture
def criterion(result_collector, scale):
    """Time a criterion body and record whether it passed.

    Usage:
        with criterion(1, "x(x+1) character sum", budget_seconds=10) as notes:
            ...
            notes["primes"] = len(primes)
    """

    @contextmanager
    def measure(number: int, name: str, budget_seconds: float):
        flush_memory()
        notes: dict = {}
        passed = False
        tracker = PerformanceTracker(name)
        try:
            with tracker:
                yield notes
            passed = True
        finally:
            result_collector.add_result(
                CriterionResult(
                    number=number,
                    name=name,
                    scale=scale.name,
                    passed=passed,
                    seconds=tracker.total_elapsed,
                    budget_seconds=budget_seconds,
                    rss_delta_bytes=tracker.total_delta,
                    probes=[asdict(p) for p in tracker.probes],
                    extra=notes,
                )
            )

    return measure
