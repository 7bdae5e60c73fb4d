"""
Defaults and environment-driven settings.

Flags override environment variables, environment variables override the
module defaults below.
"""

import math
import os
from dataclasses import dataclass

import psutil

from .errors import ConfigError

TABLE_LIMIT_ENV = "CHOWLA_LAB_TABLE_LIMIT"
MEMORY_FRACTION_ENV = "CHOWLA_LAB_MEMORY_FRACTION"

DEFAULT_TABLE_LIMIT = 10**8
DEFAULT_MEMORY_FRACTION = 0.5

# int32 smallest-prime-factor entries
BYTES_PER_TABLE_ENTRY = 4
MAX_TABLE_LIMIT = 2**31 - 1

# Characters with modulus up to this get a cached value table
CHAR_TABLE_THRESHOLD = 10**6

WIDE_INT_BITS = 128

LOG_GUARD_BAND = 1e-12

MOMENT_TAIL_C = 8 * math.e
FLST_PROXY_CONSTANT = 10.0
# C in (k+1) A_x = u = C alpha
LEVEL_CONSTANT = 0.5
DEFAULT_DISCRIMINANT = -4

DEFAULT_BLOCK_SIZE = 1 << 20
INCLUSION_EXCLUSION_MAX_PRIMES = 24
DIVISOR_ENUMERATION_CAP = 10**6
TUPLE_ENUMERATION_CAP = 10**8
MOMENT_MULTISET_CAP = 10**6
# peak working memory of one Gram accumulation in the moment majorant
MOMENT_GRAM_BYTES_CAP = 1 << 27
DIRECT_RESIDUE_CAP = 10**6


@dataclass(frozen=True)
class LabSettings:
    """Resolved runtime settings."""

    table_limit: int = DEFAULT_TABLE_LIMIT
    memory_fraction: float = DEFAULT_MEMORY_FRACTION
    threads: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.table_limit < 2:
            raise ConfigError(f"table limit must be at least 2, got {self.table_limit}")
        if not 0 < self.memory_fraction <= 1:
            raise ConfigError(
                f"memory fraction must lie in (0, 1], got {self.memory_fraction}"
            )
        if self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if self.block_size < 1:
            raise ConfigError(f"block size must be positive, got {self.block_size}")

    @classmethod
    def from_env(cls, **overrides) -> "LabSettings":
        """Build settings from the environment, then apply non-None overrides."""
        values = {}
        raw_limit = os.environ.get(TABLE_LIMIT_ENV)
        if raw_limit:
            try:
                values["table_limit"] = int(float(raw_limit))
            except ValueError as e:
                raise ConfigError(f"{TABLE_LIMIT_ENV}={raw_limit!r} is not a number") from e
        raw_fraction = os.environ.get(MEMORY_FRACTION_ENV)
        if raw_fraction:
            try:
                values["memory_fraction"] = float(raw_fraction)
            except ValueError as e:
                raise ConfigError(
                    f"{MEMORY_FRACTION_ENV}={raw_fraction!r} is not a number"
                ) from e
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def memory_budget_entries(self) -> int:
        """Largest table limit that fits the memory budget and the configured cap."""
        available = psutil.virtual_memory().available
        by_memory = int(available * self.memory_fraction) // BYTES_PER_TABLE_ENTRY
        return min(self.table_limit, by_memory, MAX_TABLE_LIMIT)


DEFAULT_SETTINGS = LabSettings()
