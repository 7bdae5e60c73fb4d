"""
Shared fixtures: session-scoped sieve tables and a seeded generator.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck
from hypothesis import settings as hypothesis_settings

from chowla_lab.arith import SieveTable, build_sieve_table
from chowla_lab.config import LabSettings

SMALL_LIMIT = 20_000
MEDIUM_LIMIT = 300_000
SEED = 12345

# _isolate_env is autouse and function-scoped; it only clears variables
hypothesis_settings.register_profile(
    "chowla-lab", suppress_health_check=[HealthCheck.function_scoped_fixture]
)
hypothesis_settings.load_profile("chowla-lab")


@pytest.fixture(scope="session")
def small_table() -> SieveTable:
    """spf table up to 2 * 10^4, enough for pointwise oracles."""
    return build_sieve_table(SMALL_LIMIT)


@pytest.fixture(scope="session")
def table() -> SieveTable:
    """spf table up to 3 * 10^5 for correlation and moment tests."""
    return build_sieve_table(MEDIUM_LIMIT)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture
def settings() -> LabSettings:
    return LabSettings(table_limit=MEDIUM_LIMIT)


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch):
    """Keep the user's CHOWLA_LAB_* variables out of the tests."""
    monkeypatch.delenv("CHOWLA_LAB_TABLE_LIMIT", raising=False)
    monkeypatch.delenv("CHOWLA_LAB_MEMORY_FRACTION", raising=False)


def pytest_addoption(parser):
    """Options for tests/acceptance; registered here so a plain `pytest` run knows them."""
    parser.addoption(
        "--acceptance-scale",
        type=str,
        default="reduced",
        choices=["full", "reduced"],
        help="Acceptance problem sizes: full (documented criteria) or reduced (quick check)",
    )
