"""
Experiment drivers: k-point correlations of lambda, lambda_r and mu, the
lambda / lambda_r comparison, the parameter choices r, A_x, u derived from an
eta proxy, and the Chebyshev moment experiment.

All correlation sums are exact integers; division by x happens once.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .arith import (
    SieveTable,
    count_large_smooth,
    factorize,
    liouville_block,
    mobius_block,
    summatory_liouville,
)
from .characters import RealCharacter, char_values, eval_char, real_primitive_character
from .config import (
    DEFAULT_DISCRIMINANT,
    LEVEL_CONSTANT,
    MOMENT_GRAM_BYTES_CAP,
    MOMENT_MULTISET_CAP,
    MOMENT_TAIL_C,
    TUPLE_ENUMERATION_CAP,
)
from .errors import CapacityError, ChowlaLabError, ConfigError, OutOfRangeError
from .parallel import blocks_for, map_blocks

logger = logging.getLogger(__name__)

# n-block length for the exact Gram accumulation of the moment majorant
GRAM_BLOCK = 1 << 14


class ArithFunction(Enum):
    LAMBDA = "lambda"
    LAMBDA_R = "lambda_r"
    MOBIUS = "mobius"


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one correlation experiment.

    Either eta_proxy or r is given. With eta_proxy, alpha =
    (loglog eta)^(1/2) (log eta)^(1/12) and r = round(x^(1/alpha)); with r
    given directly alpha is read back as log x / log r.
    """

    x: int
    shifts: tuple[int, ...]
    discriminant: int = DEFAULT_DISCRIMINANT
    eta_proxy: float | None = None
    r_override: int | None = None
    u_override: float | None = None
    A_override: float | None = None
    level_constant: float = LEVEL_CONSTANT

    def __post_init__(self):
        if self.x < 2:
            raise ConfigError(f"x must be at least 2, got {self.x}")
        if not self.shifts:
            raise ConfigError("need at least one shift")
        if len(set(self.shifts)) != len(self.shifts):
            raise ConfigError(f"shifts must be distinct, got {self.shifts}")
        if any(h < 0 for h in self.shifts):
            raise ConfigError(f"shifts must be non-negative, got {self.shifts}")
        if (self.eta_proxy is None) == (self.r_override is None):
            raise ConfigError("give exactly one of eta_proxy and r")
        if self.eta_proxy is not None and self.eta_proxy <= math.e**math.e:
            raise ConfigError(f"eta_proxy must exceed e^e, got {self.eta_proxy}")
        if not 2 <= self.r < self.x:
            raise ConfigError(f"derived r = {self.r} must satisfy 2 <= r < x = {self.x}")

    @property
    def k(self) -> int:
        return len(self.shifts)

    @property
    def q(self) -> int:
        return abs(self.discriminant)

    @property
    def alpha(self) -> float:
        if self.eta_proxy is not None:
            log_eta = math.log(self.eta_proxy)
            return math.sqrt(math.log(log_eta)) * log_eta ** (1 / 12)
        return math.log(self.x) / math.log(self.r_override)

    @property
    def r(self) -> int:
        if self.r_override is not None:
            return self.r_override
        return round(self.x ** (1 / self.alpha))

    @property
    def u(self) -> float:
        return self.u_override if self.u_override is not None else self.level_constant * self.alpha

    @property
    def A_x(self) -> float:
        return self.A_override if self.A_override is not None else self.u / (self.k + 1)

    @property
    def reference_bound(self) -> float | None:
        """1/alpha, the correlation bound with its unspecified constant set to 1."""
        return 1 / self.alpha if self.eta_proxy is not None else None

    @property
    def in_x_window(self) -> bool | None:
        """q^10 <= x <= q^((loglog eta)/3), compared in logarithms."""
        if self.eta_proxy is None or self.q < 2:
            return None
        log_q = math.log(self.q)
        log_x = math.log(self.x)
        upper = math.log(math.log(self.eta_proxy)) / 3
        return 10 * log_q <= log_x <= upper * log_q

    def character(self) -> RealCharacter:
        return real_primitive_character(self.discriminant)


# lambda_r


def lambda_r_eval(table: SieveTable, chi: RealCharacter, r: int, n: int) -> int:
    """Completely multiplicative: lambda(p) = -1 for p <= r, chi(p) for p > r."""
    value = 1
    for p, e in factorize(table, n).items():
        local = -1 if p <= r else eval_char(chi, p)
        value *= local**e
    return value


def lambda_r_block(table: SieveTable, chi: RealCharacter, r: int, lo: int, hi: int) -> np.ndarray:
    """int8 array of lambda_r(n) for lo <= n < hi."""
    table.check_block(lo, hi)
    n = np.arange(lo, hi, dtype=np.int64)
    idx = np.flatnonzero(n > 1)
    rest = n[idx]
    value = np.ones(n.size, dtype=np.int8)
    spf = table.spf
    while idx.size:
        p = spf[rest].astype(np.int64)
        rest //= p
        local = np.where(p <= r, -1, char_values(chi, p)).astype(np.int8)
        value[idx] *= local
        keep = rest > 1
        idx, rest = idx[keep], rest[keep]
    return value


def function_block(
    table: SieveTable,
    f: ArithFunction,
    lo: int,
    hi: int,
    chi: RealCharacter | None = None,
    r: int | None = None,
) -> np.ndarray:
    """f(n) for lo <= n < hi, with f(n) = 0 for n <= 0."""
    out = np.zeros(max(hi - lo, 0), dtype=np.int8)
    start = max(lo, 1)
    if start >= hi:
        return out
    if f is ArithFunction.LAMBDA:
        values = liouville_block(table, start, hi)
    elif f is ArithFunction.MOBIUS:
        values = mobius_block(table, start, hi)
    else:
        if chi is None or r is None:
            raise ConfigError("lambda_r needs a character and r")
        values = lambda_r_block(table, chi, r, start, hi)
    out[start - lo :] = values
    return out


# correlations


@dataclass(frozen=True)
class CorrelationReport:
    x: int
    shifts: tuple[int, ...]
    function: ArithFunction
    raw_sum: int
    value: float
    elapsed_ms: float


def _check_shift_range(table: SieveTable, x: int, shifts: tuple[int, ...]) -> None:
    if x < 1:
        raise OutOfRangeError(f"x must be positive, got {x}")
    if not shifts:
        raise OutOfRangeError("need at least one shift")
    top = x + max(shifts)
    if top > table.limit:
        raise OutOfRangeError(
            f"x + max(shifts) = {top} exceeds the sieve table limit {table.limit}"
        )


def _product_block(table, f, lo, hi, shifts, chi, r) -> np.ndarray:
    """prod_i f(n + h_i) for lo <= n < hi, as int8."""
    h_lo, h_hi = min(shifts), max(shifts)
    span = function_block(table, f, lo + h_lo, hi + h_hi, chi, r)
    product = np.ones(hi - lo, dtype=np.int8)
    for h in shifts:
        offset = h - h_lo
        product *= span[offset : offset + hi - lo]
    return product


def chowla_correlation(
    table: SieveTable,
    f: ArithFunction,
    x: int,
    shifts,
    chi: RealCharacter | None = None,
    r: int | None = None,
    threads: int = 1,
) -> CorrelationReport:
    """Exact sum_{n <= x} prod_i f(n + h_i) and its average."""
    shifts = tuple(int(h) for h in shifts)
    _check_shift_range(table, x, shifts)
    start = time.perf_counter()
    partial = map_blocks(
        lambda lo, hi: int(
            _product_block(table, f, lo, hi, shifts, chi, r).sum(dtype=np.int64)
        ),
        blocks_for(1, x + 1, threads),
        threads,
    )
    raw = sum(partial)
    return CorrelationReport(
        x=x,
        shifts=shifts,
        function=f,
        raw_sum=raw,
        value=raw / x,
        elapsed_ms=(time.perf_counter() - start) * 1000,
    )


@dataclass(frozen=True)
class DifferenceReport:
    x: int
    r: int
    shifts: tuple[int, ...]
    lhs: int
    termwise: int
    shifted_termwise: int
    majorant: int
    stated_majorant: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.shifted_termwise <= self.majorant

    @property
    def stated_holds(self) -> bool:
        return self.lhs <= self.stated_majorant


def correlation_difference(
    table: SieveTable,
    chi: RealCharacter,
    r: int,
    x: int,
    shifts,
    threads: int = 1,
) -> DifferenceReport:
    """Both sides of |sum (lambda(n;k) - lambda_r(n;k))| <= k sum |lambda - lambda_r| + O(k max h).

    lhs is the exact left side; shifted_termwise is sum_j sum_{n <= x}
    |lambda(n + h_j) - lambda_r(n + h_j)|, which bounds it term by term.
    Since |lambda - lambda_r| can be 2, the boundary terms contribute up to
    2 k max(h): `majorant` uses that, `stated_majorant` uses k max(h).
    """
    shifts = tuple(int(h) for h in shifts)
    _check_shift_range(table, x, shifts)
    if min(shifts) < 0:
        raise OutOfRangeError(f"shifts must be non-negative, got {shifts}")

    def kernel(lo: int, hi: int) -> tuple[int, int, int]:
        lam = _product_block(table, ArithFunction.LAMBDA, lo, hi, shifts, chi, r)
        lam_r = _product_block(table, ArithFunction.LAMBDA_R, lo, hi, shifts, chi, r)
        diff = int((lam.astype(np.int64) - lam_r).sum())
        h_max = max(shifts)
        plain = liouville_block(table, lo, hi + h_max).astype(np.int64)
        hybrid = lambda_r_block(table, chi, r, lo, hi + h_max).astype(np.int64)
        gap = np.abs(plain - hybrid)
        termwise = int(gap[: hi - lo].sum())
        shifted = sum(int(gap[h : h + hi - lo].sum()) for h in shifts)
        return diff, termwise, shifted

    parts = map_blocks(kernel, blocks_for(1, x + 1, threads), threads)
    lhs = abs(sum(p[0] for p in parts))
    termwise = sum(p[1] for p in parts)
    shifted = sum(p[2] for p in parts)
    k = len(shifts)
    h_max = max(shifts)
    return DifferenceReport(
        x=x,
        r=r,
        shifts=shifts,
        lhs=lhs,
        termwise=termwise,
        shifted_termwise=shifted,
        majorant=k * termwise + 2 * k * h_max,
        stated_majorant=k * termwise + k * h_max,
    )


# tuple combinatorics


@dataclass(frozen=True)
class TupleCount:
    m: int
    k: int
    exact: int
    bound: int
    enumerated: int | None

    @property
    def within_bound(self) -> bool:
        return self.exact <= self.bound


def _check_even_k(m: int, k: int) -> None:
    if m < 1:
        raise OutOfRangeError(f"m must be positive, got {m}")
    if k < 2 or k % 2:
        raise OutOfRangeError(f"k must be a positive even integer, got {k}")


def odd_set_tuple_count(m: int, k: int, j: int) -> int:
    """Number of k-tuples over [1, m] whose set of odd-multiplicity values is one fixed j-set.

    k! [t^k] sinh(t)^j cosh(t)^(m-j), expanded over exponentials.
    """
    total = sum(
        (-1) ** (j - a) * math.comb(j, a) * math.comb(m - j, b) * (2 * a + 2 * b - m) ** k
        for a in range(j + 1)
        for b in range(m - j + 1)
    )
    return total >> m


def enumerate_even_multiplicity_tuples(m: int, k: int) -> int:
    """Count tuples in [1, m]^k with all multiplicities even by walking every tuple."""
    _check_even_k(m, k)
    total = m**k
    if total > TUPLE_ENUMERATION_CAP:
        raise CapacityError(f"m^k = {total:,} exceeds the enumeration cap {TUPLE_ENUMERATION_CAP:,}")
    count = 0
    chunk = 1 << 20
    powers = m ** np.arange(k, dtype=np.int64)
    for lo in range(0, total, chunk):
        index = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        digits = np.sort((index[:, None] // powers) % m, axis=1)
        # sorted with even multiplicities <=> consecutive pairs agree
        count += int(np.all(digits[:, 0::2] == digits[:, 1::2], axis=1).sum())
    return count


def even_multiplicity_tuple_count(m: int, k: int) -> TupleCount:
    """Exact count, the 2^k m^(k/2) k^(k/2) bound and, when feasible, an enumeration."""
    _check_even_k(m, k)
    exact = odd_set_tuple_count(m, k, 0)
    enumerated = None
    if m**k <= TUPLE_ENUMERATION_CAP:
        enumerated = enumerate_even_multiplicity_tuples(m, k)
    else:
        logger.warning("m^k = %d too large to enumerate; only the formula is reported", m**k)
    bound = 2**k * m ** (k // 2) * k ** (k // 2)
    return TupleCount(m=m, k=k, exact=exact, bound=bound, enumerated=enumerated)


# moment experiment


@dataclass(frozen=True)
class MomentReport:
    x: int
    m: int
    k: int | None
    eps: float
    count: int
    moment: int | float | None
    majorant: int | None
    chebyshev_bound: float | None
    combinatorial_bound: float | None
    analytic_bound: float

    @property
    def holds(self) -> bool | None:
        if self.majorant is None:
            return None
        threshold = (Fraction(repr(self.eps)) * self.m) ** self.k
        return self.count * threshold <= self.majorant


def default_moment_k(m: int, eps: float) -> int:
    """The even integer closest to eps^2 m / (4e), at least 2."""
    target = eps * eps * m / (4 * math.e)
    return max(2, 2 * round(target / 2))


def gram_peak_bytes(x: int, m: int, k: int) -> int:
    """Largest working set of one _subset_sums call made by chebyshev_majorant."""
    peak = 0
    for j in range(2, min(k, m) + 1, 2):
        n = math.comb(m, j // 2)
        # int64 gram, the float64 product and its rounded copy, plus one block of rows
        peak = max(peak, 3 * n * n * 8 + n * min(GRAM_BLOCK, x) * 8)
    return peak


def _subset_sums(lam: np.ndarray, x: int, m: int, t: int) -> tuple[np.ndarray, dict]:
    """Gram matrix G[A, B] = sum_{n <= x} prod_{i in A u B} lambda(n + i) over t-subsets A, B."""
    subsets = list(itertools.combinations(range(1, m + 1), t))
    index = {s: i for i, s in enumerate(subsets)}
    gram = np.zeros((len(subsets), len(subsets)), dtype=np.int64)
    for lo in range(0, x, GRAM_BLOCK):
        hi = min(lo + GRAM_BLOCK, x)
        rows = np.ones((len(subsets), hi - lo), dtype=np.float64)
        for row, s in enumerate(subsets):
            for i in s:
                # lam[t] = lambda(t + 1), so lambda(n + i) for n = lo+1.. is lam[lo + i ...]
                rows[row] *= lam[lo + i : hi + i]
        gram += np.rint(rows @ rows.T).astype(np.int64)
    return gram, index


def chebyshev_majorant(lam: np.ndarray, x: int, m: int, k: int) -> int:
    """sum over (i_1..i_k) in [1, m]^k of |sum_{n <= x} lambda(n + i_1) ... lambda(n + i_k)|.

    The inner sum depends only on the set O of indices with odd multiplicity,
    which has even size j <= k; each such set occurs odd_set_tuple_count(m, k, j) times.
    """
    peak = gram_peak_bytes(x, m, k)
    if peak > MOMENT_GRAM_BYTES_CAP:
        raise CapacityError(
            f"Gram accumulation for m={m}, k={k} needs {peak:,} bytes, cap is {MOMENT_GRAM_BYTES_CAP:,}"
        )
    total = 0
    for j in range(0, min(k, m) + 1, 2):
        weight = odd_set_tuple_count(m, k, j)
        if weight == 0:
            continue
        if j == 0:
            total += weight * x
            continue
        t = j // 2
        gram, index = _subset_sums(lam, x, m, t)
        subtotal = 0
        for s in itertools.combinations(range(1, m + 1), j):
            subtotal += abs(int(gram[index[s[:t]], index[s[t:]]]))
        total += weight * subtotal
    return total


def moment_tail_experiment(
    table: SieveTable,
    x: int,
    m: int,
    eps: float,
    coeffs=None,
    k: int | None = None,
    threads: int = 1,
) -> MomentReport:
    """Count n <= x with |(1/m) sum c_i lambda(n + i)| >= eps, next to the Chebyshev
    majorant, the k-th moment and the exp(-eps^2 m / C) curve.

    Without an explicit k and with no even k <= m (m = 1), k and every moment
    quantity are None and only the count is reported.
    """
    coeffs = [1.0] * m if coeffs is None else [float(c) for c in coeffs]
    if len(coeffs) != m:
        raise OutOfRangeError(f"need {m} coefficients, got {len(coeffs)}")
    if any(abs(c) > 1 for c in coeffs):
        raise OutOfRangeError("coefficients must satisfy |c_i| <= 1")
    if eps <= 0:
        raise OutOfRangeError(f"eps must be positive, got {eps}")
    if m < 1:
        raise OutOfRangeError(f"m must be positive, got {m}")
    if k is None:
        k = default_moment_k(m, eps)
        if k > m:
            logger.warning("no even moment k <= m = %d; only the tail count is reported", m)
            k = None
    else:
        _check_even_k(m, k)
        if k > m:
            raise OutOfRangeError(f"k = {k} must not exceed m = {m}")
    table.check(x + m)

    lam = np.concatenate(
        map_blocks(
            lambda lo, hi: liouville_block(table, lo, hi),
            blocks_for(1, x + m + 1, threads),
            threads,
        )
    )
    integral = all(c.is_integer() for c in coeffs)
    dtype = np.int64 if integral else np.float64
    sums = np.zeros(x, dtype=dtype)
    for i, c in enumerate(coeffs, start=1):
        if c:
            sums += (np.asarray(c, dtype=dtype) * lam[i : i + x]).astype(dtype)

    eps_exact = Fraction(repr(eps))
    moment = None
    if integral:
        # |S| >= eps m  <=>  S^2 den^2 >= num^2 m^2
        left = sums * sums * eps_exact.denominator**2
        count = int(np.count_nonzero(left >= (eps_exact.numerator * m) ** 2))
        if k is not None:
            moment = sum(int(s) ** k for s in sums.tolist())
    else:
        count = int(np.count_nonzero(np.abs(sums) >= eps * m))
        if k is not None:
            moment = math.fsum((np.abs(sums) ** k).tolist())

    majorant = None
    chebyshev = None
    combinatorial = None
    if k is not None:
        combinatorial = (4 * k / (eps * eps * m)) ** (k / 2)
        subsets = sum(math.comb(m, j) for j in range(0, k + 1, 2))
        peak = gram_peak_bytes(x, m, k)
        if subsets > MOMENT_MULTISET_CAP:
            logger.warning(
                "Chebyshev majorant skipped: %d odd-multiplicity sets exceed the cap %d",
                subsets,
                MOMENT_MULTISET_CAP,
            )
        elif peak > MOMENT_GRAM_BYTES_CAP:
            logger.warning(
                "Chebyshev majorant skipped: Gram accumulation needs %d bytes, cap is %d",
                peak,
                MOMENT_GRAM_BYTES_CAP,
            )
        else:
            majorant = chebyshev_majorant(lam, x, m, k)
            chebyshev = majorant / (eps * m) ** k / x
    return MomentReport(
        x=x,
        m=m,
        k=k,
        eps=eps,
        count=count,
        moment=moment,
        majorant=majorant,
        chebyshev_bound=chebyshev,
        combinatorial_bound=combinatorial,
        analytic_bound=math.exp(-eps * eps * m / MOMENT_TAIL_C),
    )


# scans


@dataclass(frozen=True)
class ScanRow:
    experiment: str
    x: int
    shifts: str
    q: int
    r: int | None
    u: float | None
    A_x: float | None
    raw_sum: int | None
    value: float | None
    reference_bound: float | None
    elapsed_ms: float
    status: str


SCAN_COLUMNS = [
    "experiment",
    "x",
    "shifts",
    "q",
    "r",
    "u",
    "A_x",
    "raw_sum",
    "value",
    "reference_bound",
    "elapsed_ms",
    "status",
]


def correlation_cell(
    table: SieveTable,
    x: int,
    shifts,
    f: ArithFunction = ArithFunction.LAMBDA,
    discriminant: int = DEFAULT_DISCRIMINANT,
    eta_proxy: float | None = None,
    r: int | None = None,
    u: float | None = None,
    A: float | None = None,
    threads: int = 1,
) -> ScanRow:
    """One correlation row with its derived parameters; errors propagate."""
    shifts = tuple(int(h) for h in shifts)
    config = None
    if eta_proxy is not None or r is not None:
        config = ExperimentConfig(
            x=x,
            shifts=shifts,
            discriminant=discriminant,
            eta_proxy=eta_proxy,
            r_override=r,
            u_override=u,
            A_override=A,
        )
        if config.in_x_window is False:
            logger.info("x = %d lies outside [q^10, q^((loglog eta)/3)] for q = %d", x, config.q)
    chi = config.character() if config else real_primitive_character(discriminant)
    report = chowla_correlation(
        table, f, x, shifts, chi=chi, r=config.r if config else None, threads=threads
    )
    return ScanRow(
        experiment=f.value,
        x=x,
        shifts=",".join(str(h) for h in shifts),
        q=abs(discriminant),
        r=config.r if config else None,
        u=config.u if config else None,
        A_x=config.A_x if config else None,
        raw_sum=report.raw_sum,
        value=report.value,
        reference_bound=config.reference_bound if config else None,
        elapsed_ms=report.elapsed_ms,
        status="ok",
    )


def correlation_scan(
    table: SieveTable,
    xs,
    shifts_grid,
    f: ArithFunction = ArithFunction.LAMBDA,
    discriminant: int = DEFAULT_DISCRIMINANT,
    eta_proxy: float | None = None,
    r: int | None = None,
    threads: int = 1,
) -> list[ScanRow]:
    """One row per (x, shifts) cell in grid order; failed cells carry their error as status."""
    rows = []
    for x in xs:
        for shifts in shifts_grid:
            shifts = tuple(shifts)
            start = time.perf_counter()
            try:
                rows.append(
                    correlation_cell(table, x, shifts, f, discriminant, eta_proxy, r, threads=threads)
                )
            except ChowlaLabError as e:
                label = ",".join(str(h) for h in shifts)
                logger.warning("scan cell x=%d shifts=%s failed: %s", x, label, e)
                rows.append(
                    ScanRow(
                        experiment=f.value,
                        x=x,
                        shifts=label,
                        q=abs(discriminant),
                        r=None,
                        u=None,
                        A_x=None,
                        raw_sum=None,
                        value=None,
                        reference_bound=None,
                        elapsed_ms=(time.perf_counter() - start) * 1000,
                        status=f"error: {type(e).__name__}: {e}",
                    )
                )
    return rows


@dataclass(frozen=True)
class DecayRow:
    x: int
    summatory: int
    ratio: float


def pnt_decay(table: SieveTable, xs, threads: int = 1) -> list[DecayRow]:
    """|L(x)| / x at each x."""
    rows = []
    for x in xs:
        total = summatory_liouville(table, x, threads)
        rows.append(DecayRow(x=x, summatory=total, ratio=abs(total) / x))
    return rows


@dataclass(frozen=True)
class PreSieveReport:
    x: int
    r: int
    A: float
    count: int
    reference: float

    @property
    def ratio(self) -> float:
        return self.count / self.reference


def presieve_report(table: SieveTable, x: int, r: int, A: float, threads: int = 1) -> PreSieveReport:
    """#{n <= x : r-smooth part > r^A} next to the x / A scale it is bounded by."""
    count = count_large_smooth(table, x, r, A, threads)
    return PreSieveReport(x=x, r=r, A=A, count=count, reference=x / A)
