"""
Bulk and pointwise multiplicative functions backed by one smallest-prime-factor table.

The table stores spf[n] as int32 for 0 <= n <= limit (spf[0] = 0, spf[1] = 1,
spf[p] = p for primes), 4 bytes per entry. Every function here (Liouville,
Moebius, Omega, omega, smooth/rough splits, tau_kappa) walks that one table.

Block kernels take a half-open range [lo, hi) and return numpy arrays; they
walk all numbers of the block at once, one prime factor per pass, so a block
costs O(size * max Omega) vectorised work.
"""

import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .config import (
    BYTES_PER_TABLE_ENTRY,
    DEFAULT_SETTINGS,
    LOG_GUARD_BAND,
    WIDE_INT_BITS,
    LabSettings,
)
from .errors import CapacityError, OutOfRangeError, WideIntegerOverflow
from .parallel import blocks_for, map_blocks

logger = logging.getLogger(__name__)

# Largest kappa for which tau_kappa(n), n < 2^31, is guaranteed to fit int64
TAU_BLOCK_MAX_KAPPA = 6


def checked(value: int, bits: int = WIDE_INT_BITS) -> int:
    """Return value unchanged, or raise if it does not fit a signed `bits`-bit integer."""
    if value.bit_length() >= bits:
        raise WideIntegerOverflow(
            f"value with {value.bit_length()} bits exceeds the {bits}-bit signed capacity"
        )
    return value


@dataclass(frozen=True, eq=False)
class SieveTable:
    """Immutable smallest-prime-factor table for 0 <= n <= limit."""

    limit: int
    spf: np.ndarray

    @property
    def nbytes(self) -> int:
        return int(self.spf.nbytes)

    def check(self, n: int, lo: int = 1) -> None:
        if n < lo or n > self.limit:
            raise OutOfRangeError(
                f"n={n} outside the sieve table range [{lo}, {self.limit}]"
            )

    def check_block(self, lo: int, hi: int) -> None:
        if lo < 1 or hi - 1 > self.limit:
            raise OutOfRangeError(
                f"block [{lo}, {hi}) outside the sieve table range [1, {self.limit}]"
            )

    def smallest_prime_factor(self, n: int) -> int:
        self.check(n, lo=2)
        return int(self.spf[n])

    def is_prime(self, n: int) -> bool:
        self.check(n)
        return n >= 2 and int(self.spf[n]) == n


@dataclass(frozen=True)
class SmoothSplit:
    """n = smooth * rough with smooth r-smooth and rough free of primes <= r."""

    n: int
    r: int
    smooth: int
    rough: int


def build_sieve_table(limit: int, settings: LabSettings | None = None) -> SieveTable:
    """Build the smallest-prime-factor table up to `limit` (Eratosthenes, O(N log log N))."""
    settings = settings or DEFAULT_SETTINGS
    if limit < 2:
        raise OutOfRangeError(f"sieve table limit must be at least 2, got {limit}")
    budget = settings.memory_budget_entries()
    if limit > budget:
        raise CapacityError(
            f"sieve table limit {limit:,} exceeds the budget of {budget:,} entries "
            f"({BYTES_PER_TABLE_ENTRY} bytes per entry)"
        )

    start = time.perf_counter()
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            tail = spf[p * p :: p]
            tail[tail == 0] = p
    # unmarked entries are 0, 1 and the primes; each is its own spf
    unmarked = np.flatnonzero(spf == 0)
    spf[unmarked] = unmarked
    spf.flags.writeable = False

    logger.debug(
        "built sieve table up to %d (%.1f MB) in %.3fs",
        limit,
        spf.nbytes / (1024 * 1024),
        time.perf_counter() - start,
    )
    return SieveTable(limit=limit, spf=spf)


def trial_factorize(n: int) -> dict[int, int]:
    """Factor |n| by trial division; for values outside any table."""
    n = abs(n)
    if n == 0:
        raise OutOfRangeError("cannot factor 0")
    factors: dict[int, int] = {}
    while n % 2 == 0:
        factors[2] = factors.get(2, 0) + 1
        n //= 2
    p = 3
    while p * p <= n:
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
        p += 2
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def is_prime_trial(n: int) -> bool:
    if n < 2:
        return False
    return trial_factorize(n) == {n: 1}


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in trial_factorize(n).values())


# Pointwise functions


def factorize(table: SieveTable, n: int) -> dict[int, int]:
    """Prime factorization of n via repeated spf division."""
    table.check(n)
    factors: dict[int, int] = {}
    spf = table.spf
    while n > 1:
        p = int(spf[n])
        factors[p] = factors.get(p, 0) + 1
        n //= p
    return factors


def big_omega(table: SieveTable, n: int) -> int:
    return sum(factorize(table, n).values())


def small_omega(table: SieveTable, n: int) -> int:
    return len(factorize(table, n))


def liouville(table: SieveTable, n: int) -> int:
    """(-1)^Omega(n); liouville(1) = 1."""
    return -1 if big_omega(table, n) % 2 else 1


def mobius(table: SieveTable, n: int) -> int:
    """0 unless n is squarefree, else (-1)^omega(n)."""
    factors = factorize(table, n)
    if any(e > 1 for e in factors.values()):
        return 0
    return -1 if len(factors) % 2 else 1


def smooth_split(table: SieveTable, n: int, r: int) -> SmoothSplit:
    """Split n into its r-smooth part and its r-sifted part."""
    if r < 2:
        raise OutOfRangeError(f"smoothness bound must be at least 2, got {r}")
    smooth = 1
    for p, e in factorize(table, n).items():
        if p <= r:
            smooth *= p**e
    return SmoothSplit(n=n, r=r, smooth=smooth, rough=n // smooth)


def tau_kappa(table: SieveTable, n: int, kappa: int) -> int:
    """Number of ordered kappa-tuples of positive integers with product n."""
    if kappa < 1:
        raise OutOfRangeError(f"kappa must be positive, got {kappa}")
    return math.prod(
        math.comb(e + kappa - 1, kappa - 1) for e in factorize(table, n).values()
    )


def lcm_many(values: list[int], bits: int = WIDE_INT_BITS) -> int:
    """Least common multiple with checked wide-integer capacity."""
    if not values:
        raise OutOfRangeError("lcm of an empty list is undefined")
    if any(v < 1 for v in values):
        raise OutOfRangeError(f"lcm arguments must be positive, got {values}")
    return reduce(lambda acc, v: checked(math.lcm(acc, v), bits), values, 1)


def lcm_lower_bound(values: list[int]) -> Fraction:
    """(prod a_i) / prod_{i<j} gcd(a_i, a_j), a lower bound for lcm(a_0, ..., a_k)."""
    numerator = math.prod(values)
    denominator = 1
    for i, a in enumerate(values):
        for b in values[i + 1 :]:
            denominator *= math.gcd(a, b)
    return Fraction(numerator, denominator)


# Block kernels over [lo, hi)


def _block_start(table: SieveTable, lo: int, hi: int):
    table.check_block(lo, hi)
    n = np.arange(lo, hi, dtype=np.int64)
    idx = np.flatnonzero(n > 1)
    return n, idx, n[idx]


def liouville_block(table: SieveTable, lo: int, hi: int) -> np.ndarray:
    """int8 array of lambda(n) for lo <= n < hi."""
    n, idx, rest = _block_start(table, lo, hi)
    parity = np.zeros(n.size, dtype=np.int8)
    spf = table.spf
    while idx.size:
        rest //= spf[rest]
        parity[idx] ^= 1
        keep = rest > 1
        idx, rest = idx[keep], rest[keep]
    return (1 - 2 * parity).astype(np.int8)


def mobius_block(table: SieveTable, lo: int, hi: int) -> np.ndarray:
    """int8 array of mu(n) for lo <= n < hi."""
    n, idx, rest = _block_start(table, lo, hi)
    mu = np.ones(n.size, dtype=np.int8)
    last = np.zeros(idx.size, dtype=np.int64)
    spf = table.spf
    while idx.size:
        p = spf[rest].astype(np.int64)
        rest //= p
        mu[idx] *= -1
        square = p == last
        mu[idx[square]] = 0
        keep = (rest > 1) & ~square
        idx, rest, last = idx[keep], rest[keep], p[keep]
    return mu


def small_omega_block(table: SieveTable, lo: int, hi: int) -> np.ndarray:
    """int64 array of omega(n), the number of distinct prime factors."""
    n, idx, rest = _block_start(table, lo, hi)
    count = np.zeros(n.size, dtype=np.int64)
    last = np.zeros(idx.size, dtype=np.int64)
    spf = table.spf
    while idx.size:
        p = spf[rest].astype(np.int64)
        rest //= p
        count[idx] += p != last
        keep = rest > 1
        idx, rest, last = idx[keep], rest[keep], p[keep]
    return count


def smooth_part_block(table: SieveTable, lo: int, hi: int, r: int) -> np.ndarray:
    """int64 array of the r-smooth part of each n in [lo, hi)."""
    n, idx, rest = _block_start(table, lo, hi)
    smooth = np.ones(n.size, dtype=np.int64)
    spf = table.spf
    while idx.size:
        p = spf[rest].astype(np.int64)
        rest //= p
        small = p <= r
        smooth[idx[small]] *= p[small]
        keep = rest > 1
        idx, rest = idx[keep], rest[keep]
    return smooth


def tau_kappa_block(table: SieveTable, lo: int, hi: int, kappa: int) -> np.ndarray:
    """int64 array of tau_kappa(n) for lo <= n < hi (kappa <= 6)."""
    if not 1 <= kappa <= TAU_BLOCK_MAX_KAPPA:
        raise OutOfRangeError(
            f"block tau_kappa supports 1 <= kappa <= {TAU_BLOCK_MAX_KAPPA}, got {kappa}"
        )
    n, idx, rest = _block_start(table, lo, hi)
    binom = np.array([math.comb(e + kappa - 1, kappa - 1) for e in range(64)], dtype=np.int64)
    tau = np.ones(n.size, dtype=np.int64)
    last = np.zeros(idx.size, dtype=np.int64)
    run = np.zeros(idx.size, dtype=np.int64)
    spf = table.spf
    while idx.size:
        p = spf[rest].astype(np.int64)
        rest //= p
        run = np.where(p == last, run + 1, 1)
        following = np.where(rest > 1, spf[rest], 0)
        closed = following != p
        tau[idx[closed]] *= binom[run[closed]]
        keep = rest > 1
        idx, rest, last, run = idx[keep], rest[keep], p[keep], run[keep]
    return tau


def primes_up_to(table: SieveTable, x: int) -> np.ndarray:
    """Ascending int64 array of the primes p <= x."""
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    table.check(x)
    n = np.arange(2, x + 1, dtype=np.int64)
    return n[table.spf[2 : x + 1] == n]


def summatory_liouville(table: SieveTable, x: int, threads: int = 1) -> int:
    """L(x) = sum_{n <= x} lambda(n), exact."""
    if x < 1:
        return 0
    table.check(x)
    blocks = blocks_for(1, x + 1, threads)
    partial = map_blocks(
        lambda lo, hi: int(liouville_block(table, lo, hi).sum(dtype=np.int64)),
        blocks,
        threads,
    )
    return sum(partial)


def count_large_smooth(
    table: SieveTable, x: int, r: int, A: float, threads: int = 1
) -> int:
    """#{n <= x : the r-smooth part of n exceeds r^A}.

    The comparison is strict: a smooth part equal to r^A is not counted, so
    x=10, r=2, A=3 gives 0 (8 = 2^3 is the only candidate).

    Integral A compares against r**A exactly. Otherwise the comparison is done
    in logarithms with a relative guard band; values inside the band are
    resolved exactly when A is a short dyadic fraction, else counted as equal.
    """
    table.check(x)
    if r < 2:
        raise OutOfRangeError(f"smoothness bound must be at least 2, got {r}")
    if A < 1:
        raise OutOfRangeError(f"A must be at least 1, got {A}")

    log_threshold = A * math.log(r)
    if log_threshold > math.log(x) * (1 + LOG_GUARD_BAND):
        # smooth parts never exceed n <= x
        return 0

    exact_threshold = r ** int(A) if float(A).is_integer() else None
    ratio = Fraction(A)

    def kernel(lo: int, hi: int) -> int:
        smooth = smooth_part_block(table, lo, hi, r)
        if exact_threshold is not None:
            return int(np.count_nonzero(smooth > exact_threshold))
        logs = np.log(smooth.astype(np.float64))
        band = LOG_GUARD_BAND * log_threshold
        above = int(np.count_nonzero(logs > log_threshold + band))
        ambiguous = smooth[np.abs(logs - log_threshold) <= band]
        if ambiguous.size:
            if ratio.denominator <= 1024:
                # s > r^(a/b)  <=>  s^b > r^a
                above += sum(
                    1
                    for s in ambiguous.tolist()
                    if s**ratio.denominator > r**ratio.numerator
                )
            else:
                logger.warning(
                    "%d smooth parts within the guard band of r^A; counted as equal",
                    ambiguous.size,
                )
        return above

    return sum(map_blocks(kernel, blocks_for(1, x + 1, threads), threads))
