"""
Sieve layer: local densities nu(p), their CRT products nu(d), root counts
N(p), the fundamental-lemma estimate and exact sifted counts.

A sieve problem pairs an enumerable set with a finite prime set. Two set
shapes are supported: an interval intersected with an arithmetic
progression, and the values of a product of linear forms prod(c_i + s_i m)
over an interval of m.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from .arith import (
    TAU_BLOCK_MAX_KAPPA,
    SieveTable,
    tau_kappa,
    tau_kappa_block,
    trial_factorize,
)
from .config import (
    DIRECT_RESIDUE_CAP,
    DIVISOR_ENUMERATION_CAP,
    FLST_PROXY_CONSTANT,
    INCLUSION_EXCLUSION_MAX_PRIMES,
    TUPLE_ENUMERATION_CAP,
)
from .errors import (
    AxiomViolationError,
    CapacityError,
    DegenerateSieveError,
    InconsistencyError,
    OutOfRangeError,
)
from .parallel import blocks_for, map_blocks

logger = logging.getLogger(__name__)

Pairs = tuple[tuple[int, int], ...]


class NuCase(Enum):
    """Which branch of the local-density analysis produced a count."""

    MODULUS = "p divides q"
    GENERIC = "p coprime to every coefficient"
    SINGLE_DIVISOR = "p divides some coefficients"
    DEGENERATE = "identically zero factor"
    DIRECT = "p <= h_max, counted directly"


@dataclass(frozen=True)
class NuResult:
    count: int
    case: NuCase


@dataclass(frozen=True)
class CongruenceFamily:
    """Linear forms c_i + s_i m whose product is sieved, with the modulus q they live under."""

    factors: Pairs
    q: int = 1
    h_max: int = 0

    def __post_init__(self):
        if not self.factors:
            raise OutOfRangeError("a congruence family needs at least one linear form")
        if self.q < 1:
            raise OutOfRangeError(f"modulus must be positive, got {self.q}")

    @classmethod
    def of(cls, pairs, q: int = 1, h_max: int = 0) -> "CongruenceFamily":
        return cls(tuple((int(c), int(s)) for c, s in pairs), q=q, h_max=h_max)

    @property
    def size(self) -> int:
        return len(self.factors)


def direct_root_count(pairs: Pairs, d: int) -> int:
    """#{m mod d : prod(c_i + s_i m) = 0 mod d}, by enumerating every residue."""
    return int(root_mask(pairs, d).sum())


def root_mask(pairs: Pairs, d: int) -> np.ndarray:
    if d < 1:
        raise OutOfRangeError(f"modulus must be positive, got {d}")
    if d > DIRECT_RESIDUE_CAP:
        raise CapacityError(f"direct residue enumeration limited to {DIRECT_RESIDUE_CAP:,}, got {d:,}")
    m = np.arange(d, dtype=np.int64)
    product = np.ones(d, dtype=np.int64) % d
    for c, s in pairs:
        product = product * ((c % d + (s % d) * m) % d) % d
    return product == 0


def crt_root_classes(pairs: Pairs, d: int) -> np.ndarray | None:
    """Roots of prod(c_i + s_i m) mod squarefree d, built prime by prime through CRT.

    None when d is not squarefree, is too wide for int64 classes, or has more
    than DIRECT_RESIDUE_CAP roots.
    """
    if d >= 2**62:
        return None
    factors = trial_factorize(d)
    if any(e > 1 for e in factors.values()):
        return None
    classes = np.zeros(1, dtype=np.int64)
    modulus = 1
    for p in sorted(factors):
        if p > DIRECT_RESIDUE_CAP:
            return None
        roots = np.flatnonzero(root_mask(pairs, p)).astype(np.int64)
        if classes.size * roots.size > DIRECT_RESIDUE_CAP:
            return None
        inverse = pow(modulus, -1, p)
        lift = (roots[None, :] - classes[:, None]) % p * inverse % p
        classes = (classes[:, None] + modulus * lift).ravel()
        modulus *= p
    return classes


def _classified_count(pairs: Pairs, p: int, h_max: int) -> NuResult:
    if p <= h_max:
        return NuResult(direct_root_count(pairs, p), NuCase.DIRECT)
    roots = set()
    divisor_hit = False
    for c, s in pairs:
        if s % p == 0:
            if c % p == 0:
                return NuResult(p, NuCase.DEGENERATE)
            divisor_hit = True
            continue
        roots.add((-c * pow(s, -1, p)) % p)
    case = NuCase.SINGLE_DIVISOR if divisor_hit else NuCase.GENERIC
    return NuResult(len(roots), case)


def nu_p(family: CongruenceFamily, p: int, q: int | None = None, h_max: int | None = None) -> NuResult:
    """Number of residues m mod p killing the product of the family's forms.

    Primes dividing q give 0, since the forms are restricted to values coprime
    to q. Primes p <= h_max are counted directly.
    """
    q = family.q if q is None else q
    h_max = family.h_max if h_max is None else h_max
    if q % p == 0:
        return NuResult(0, NuCase.MODULUS)
    return _classified_count(family.factors, p, h_max)


def root_count_mod_p(pairs, p: int, h_max: int = 0) -> NuResult:
    """N(p) = #{n mod p : prod(b_i + n a_i) = 0 mod p}."""
    return _classified_count(tuple((int(b), int(a)) for b, a in pairs), p, h_max)


def _factor_squarefree(d: int, table: SieveTable | None) -> list[int]:
    if table is not None and d > table.limit:
        raise OutOfRangeError(f"d={d} exceeds the factoring capacity {table.limit}")
    factors = trial_factorize(d)
    if any(e > 1 for e in factors.values()):
        raise OutOfRangeError(f"d={d} is not squarefree")
    return sorted(factors)


def nu_d(family: CongruenceFamily, d: int, table: SieveTable | None = None) -> int:
    """prod_{p | d} nu(p) for squarefree d."""
    if d < 1:
        raise OutOfRangeError(f"d must be positive, got {d}")
    return math.prod(nu_p(family, p).count for p in _factor_squarefree(d, table))


def coprime_count_formula(pairs: Pairs, q: int) -> int:
    """(q / rad q) * prod_{p | q} (p - N(p))."""
    total = q
    for p in trial_factorize(q):
        total = total // p * (p - _classified_count(pairs, p, 0).count)
    return total


@dataclass(frozen=True)
class CoprimeResidueCount:
    q: int
    formula: int
    direct: int | None


def coprime_residue_count(pairs, q: int, direct: bool | None = None) -> CoprimeResidueCount:
    """#{n in [0, q) : gcd(prod(b_i + n a_i), q) = 1}, by Euler product and by enumeration."""
    pairs = tuple((int(b), int(a)) for b, a in pairs)
    if q < 1:
        raise OutOfRangeError(f"modulus must be positive, got {q}")
    formula = coprime_count_formula(pairs, q)
    if direct is None:
        direct = q <= DIRECT_RESIDUE_CAP
    counted = None
    if direct:
        if q > DIRECT_RESIDUE_CAP:
            raise CapacityError(
                f"direct residue enumeration limited to {DIRECT_RESIDUE_CAP:,}, got {q:,}"
            )
        n = np.arange(q, dtype=np.int64)
        coprime = np.ones(q, dtype=bool)
        for b, a in pairs:
            coprime &= np.gcd((b % q + (a % q) * n) % q, q) == 1
        counted = int(coprime.sum())
        if counted != formula:
            raise InconsistencyError(
                f"coprime residues mod {q}: Euler product {formula} != enumeration {counted}"
            )
    return CoprimeResidueCount(q=q, formula=formula, direct=counted)


# Set shapes


@dataclass(frozen=True)
class ProgressionSet:
    """{n in [lo, hi] : n = residue mod modulus}."""

    lo: int
    hi: int
    modulus: int = 1
    residue: int = 0

    def __post_init__(self):
        if self.modulus < 1:
            raise OutOfRangeError(f"progression modulus must be positive, got {self.modulus}")

    def _count_class(self, t: int, L: int) -> int:
        if self.hi < self.lo:
            return 0
        return (self.hi - t) // L - (self.lo - 1 - t) // L

    @property
    def size(self) -> int:
        return self._count_class(self.residue, self.modulus)

    def natural_x(self) -> float:
        return max(self.hi - self.lo + 1, 0) / self.modulus

    def natural_nu(self, p: int) -> int:
        if self.modulus % p:
            return 1
        return p if self.residue % p == 0 else 0

    def count_divisible(self, d: int) -> int:
        """A_d, by combining n = residue mod modulus with n = 0 mod d."""
        g = math.gcd(self.modulus, d)
        if self.residue % g:
            return 0
        L = self.modulus // g * d
        # n = residue + modulus * t with modulus * t = -residue mod d
        step = self.modulus // g
        t = (-self.residue // g * pow(step, -1, d // g)) % (d // g) if d // g > 1 else 0
        return self._count_class((self.residue + self.modulus * t) % L, L)

    def sifted_count(self, primes: tuple[int, ...]) -> int:
        if self.size == 0:
            return 0
        _check_scan(self.size)
        first = self.lo + (self.residue - self.lo) % self.modulus
        n = np.arange(first, self.hi + 1, self.modulus, dtype=np.int64)
        keep = np.ones(n.size, dtype=bool)
        for p in primes:
            keep &= n % p != 0
        return int(keep.sum())


@dataclass(frozen=True)
class LinearFormsSet:
    """{prod(c_i + s_i m) : m_lo <= m <= m_hi}."""

    factors: Pairs
    m_lo: int
    m_hi: int

    @property
    def size(self) -> int:
        return max(self.m_hi - self.m_lo + 1, 0)

    def natural_x(self) -> float:
        return float(self.size)

    def natural_nu(self, p: int) -> int:
        return _classified_count(self.factors, p, 0).count

    def count_divisible(self, d: int) -> int:
        """A_d. Small d counts root classes mod d; larger d combines the roots mod each
        prime by CRT, or scans the m-range when there are too many of them."""
        if self.size == 0:
            return 0
        if d <= DIRECT_RESIDUE_CAP:
            roots = np.flatnonzero(root_mask(self.factors, d))
        else:
            roots = crt_root_classes(self.factors, d)
            if roots is None:
                return self._scan_divisible(d)
        # members of each root class inside [m_lo, m_hi]
        counts = (self.m_hi - roots) // d - (self.m_lo - 1 - roots) // d
        return int(counts.sum())

    def _scan_divisible(self, d: int) -> int:
        _check_scan(self.size)
        m = np.arange(self.m_lo, self.m_hi + 1, dtype=np.int64)
        keep = np.ones(m.size, dtype=bool)
        for p, e in trial_factorize(d).items():
            valuation = np.zeros(m.size, dtype=np.int64)
            for c, s in self.factors:
                value = c + s * m
                zero = value == 0
                rest = np.where(zero, 1, value)
                for _ in range(e):
                    hit = rest % p == 0
                    valuation += hit
                    rest = np.where(hit, rest // p, rest)
                valuation[zero] += e
            keep &= valuation >= e
        return int(keep.sum())

    def sifted_count(self, primes: tuple[int, ...]) -> int:
        if self.size == 0:
            return 0
        _check_scan(self.size)
        m = np.arange(self.m_lo, self.m_hi + 1, dtype=np.int64)
        keep = np.ones(m.size, dtype=bool)
        for c, s in self.factors:
            value = c + s * m
            for p in primes:
                keep &= value % p != 0
        return int(keep.sum())


def _check_scan(size: int) -> None:
    if size > TUPLE_ENUMERATION_CAP:
        raise CapacityError(f"direct scan limited to {TUPLE_ENUMERATION_CAP:,} elements, got {size:,}")


SetSpec = ProgressionSet | LinearFormsSet


@dataclass(frozen=True)
class SieveProblem:
    """A set, a finite prime set, the scale X and nu(p) for each sieving prime."""

    set_spec: SetSpec
    primes: tuple[int, ...]
    X: float
    nu: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if list(self.primes) != sorted(set(self.primes)):
            raise OutOfRangeError(f"sieving primes must be strictly ascending, got {self.primes}")
        if len(self.nu) != len(self.primes):
            raise OutOfRangeError("need one nu(p) per sieving prime")
        if self.X < 0:
            raise OutOfRangeError(f"X must be non-negative, got {self.X}")

    @classmethod
    def for_set(
        cls, set_spec: SetSpec, primes, X: float | None = None, label: str = ""
    ) -> "SieveProblem":
        primes = tuple(int(p) for p in primes)
        return cls(
            set_spec=set_spec,
            primes=primes,
            X=set_spec.natural_x() if X is None else X,
            nu=tuple(set_spec.natural_nu(p) for p in primes),
            label=label,
        )

    @property
    def y(self) -> int:
        return max(self.primes, default=1)

    def nu_of(self, divisor_primes: tuple[int, ...]) -> int:
        lookup = dict(zip(self.primes, self.nu))
        return math.prod(lookup[p] for p in divisor_primes)

    def remainder(self, d: int, divisor_primes: tuple[int, ...]) -> float:
        """r_d = A_d - nu(d) X / d."""
        return self.set_spec.count_divisible(d) - self.nu_of(divisor_primes) * self.X / d

    def check_axiom1(self) -> None:
        for p, nu in zip(self.primes, self.nu):
            if nu == p:
                raise DegenerateSieveError(f"nu({p}) = {p}: every residue class mod {p} is removed")
            if not 0 <= nu < p:
                raise AxiomViolationError(f"nu({p}) = {nu} violates 0 <= nu(p) < p")


def uniform_problem(x: int, primes) -> SieveProblem:
    """[1, x] sifted by `primes`, nu = 1, X = x."""
    return SieveProblem.for_set(ProgressionSet(1, x), primes, X=float(x), label=f"interval-{x}")


def squarefree_divisors(
    primes: tuple[int, ...], limit: float | None = None
) -> Iterator[tuple[int, tuple[int, ...]]]:
    """Yield (d, primes of d) for squarefree d | prod(primes), d <= limit, in depth-first order."""
    count = 0

    def walk(start: int, d: int, chosen: tuple[int, ...]):
        nonlocal count
        count += 1
        if count > DIVISOR_ENUMERATION_CAP:
            raise CapacityError(
                f"more than {DIVISOR_ENUMERATION_CAP:,} squarefree divisors below the level"
            )
        yield d, chosen
        for i in range(start, len(primes)):
            nd = d * primes[i]
            if limit is not None and nd > limit:
                break
            yield from walk(i + 1, nd, chosen + (primes[i],))

    yield from walk(0, 1, ())


@dataclass(frozen=True)
class SExact:
    direct: int
    inclusion_exclusion: int


def s_exact(problem: SieveProblem) -> SExact:
    """S(A, P) by direct scan and by sum_{d | P} mu(d) A_d; both must agree."""
    if len(problem.primes) > INCLUSION_EXCLUSION_MAX_PRIMES:
        raise CapacityError(
            f"inclusion-exclusion limited to {INCLUSION_EXCLUSION_MAX_PRIMES} primes, "
            f"got {len(problem.primes)}"
        )
    direct = problem.set_spec.sifted_count(problem.primes)
    legendre = sum(
        (-1) ** len(chosen) * problem.set_spec.count_divisible(d)
        for d, chosen in squarefree_divisors(problem.primes)
    )
    if direct != legendre:
        raise InconsistencyError(
            f"sifted count {direct} != inclusion-exclusion {legendre} for {problem.label or problem}"
        )
    logger.debug("S(A, P) = %d over %d primes", direct, len(problem.primes))
    return SExact(direct=direct, inclusion_exclusion=legendre)


@dataclass(frozen=True)
class FlstEstimate:
    main: float
    u: float
    relative_error_budget: float
    remainder_budget: float
    level: float


def flst_estimate(problem: SieveProblem, u: float) -> FlstEstimate:
    """Main term X prod(1 - nu(p)/p), the u^(-u/2) budget and sum_{d <= y^u, d | P} |r_d|."""
    if u < 1:
        raise OutOfRangeError(f"u must be at least 1, got {u}")
    problem.check_axiom1()
    main = problem.X * math.prod(1 - nu / p for p, nu in zip(problem.primes, problem.nu))
    level = float(problem.y) ** u
    remainder = math.fsum(
        abs(problem.remainder(d, chosen))
        for d, chosen in squarefree_divisors(problem.primes, level)
    )
    return FlstEstimate(
        main=main,
        u=u,
        relative_error_budget=u ** (-u / 2),
        remainder_budget=remainder,
        level=level,
    )


@dataclass(frozen=True)
class FlstCheck:
    label: str
    estimate: FlstEstimate
    s_exact: int
    deviation: float
    measured_constant: float
    constant: float
    holds: bool


def flst_check(problem: SieveProblem, u: float, constant: float = FLST_PROXY_CONSTANT) -> FlstCheck:
    """|S - main| <= constant * (u^(-u/2) main + remainder budget), with the best constant measured."""
    estimate = flst_estimate(problem, u)
    exact = s_exact(problem).direct
    deviation = abs(exact - estimate.main)
    scale = estimate.relative_error_budget * estimate.main + estimate.remainder_budget
    if scale > 0:
        measured = deviation / scale
    else:
        measured = 0.0 if deviation == 0 else math.inf
    if deviation > constant * scale:
        logger.warning(
            "fundamental lemma fails at u=%s for %s: measured constant %.3g", u, problem.label, measured
        )
    return FlstCheck(
        label=problem.label,
        estimate=estimate,
        s_exact=exact,
        deviation=deviation,
        measured_constant=measured,
        constant=constant,
        holds=deviation <= constant * scale,
    )


@dataclass(frozen=True)
class Axiom2Report:
    kappa: float
    sup_deviation: float
    cap_holds: bool
    violations: tuple[int, ...] = field(default_factory=tuple)


def axiom2_check(problem: SieveProblem, kappa: float, k_cap: float, eps: float) -> Axiom2Report:
    """sup over omega of |sum_{p <= omega} nu(p) log(p)/p - kappa log(omega)|, and the cap on nu(p).

    The partial sum is a step function, so the supremum is attained at a prime,
    either just after its jump or just before the next one.
    """
    if not 0 < eps <= 1:
        raise OutOfRangeError(f"eps must lie in (0, 1], got {eps}")
    sup = 0.0
    terms: list[float] = []
    previous = 0.0
    for p, nu in zip(problem.primes, problem.nu):
        log_p = math.log(p)
        before = abs(previous - kappa * log_p)
        terms.append(nu * log_p / p)
        current = math.fsum(terms)
        sup = max(sup, before, abs(current - kappa * log_p))
        previous = current
    violations = tuple(
        p for p, nu in zip(problem.primes, problem.nu) if nu > min(k_cap, (1 - eps) * p)
    )
    return Axiom2Report(
        kappa=kappa, sup_deviation=sup, cap_holds=not violations, violations=violations
    )


@dataclass(frozen=True)
class DivisorSumReport:
    r: int
    u: float
    kappa: int
    limit: int
    exact_sum: int
    bound: float

    @property
    def ratio(self) -> float:
        return self.exact_sum / self.bound if self.bound else math.inf


def _floor_power(r: int, u: float) -> int:
    if float(u).is_integer():
        return r ** int(u)
    n = math.floor(r**u)
    # correct float rounding at the boundary
    while (n + 1) > r**u:
        n -= 1
    while (n + 1) <= r**u:
        n += 1
    return n


def divisor_sum_bound(table: SieveTable, r: int, u: float, kappa: int, threads: int = 1) -> DivisorSumReport:
    """Exact sum_{d <= r^u} tau_kappa(d) next to r^u (u log r)^kappa."""
    if r < 2 or u <= 0 or kappa < 1:
        raise OutOfRangeError(f"need r >= 2, u > 0, kappa >= 1; got r={r}, u={u}, kappa={kappa}")
    limit = _floor_power(r, u)
    if limit > table.limit:
        raise CapacityError(f"r^u = {limit:,} exceeds the sieve table limit {table.limit:,}")

    if kappa <= TAU_BLOCK_MAX_KAPPA:
        def kernel(lo: int, hi: int) -> int:
            return int(tau_kappa_block(table, lo, hi, kappa).sum(dtype=np.int64))
    else:
        def kernel(lo: int, hi: int) -> int:
            return sum(tau_kappa(table, n, kappa) for n in range(lo, hi))

    exact = sum(map_blocks(kernel, blocks_for(1, limit + 1, threads), threads))
    bound = r**u * (u * math.log(r)) ** kappa
    return DivisorSumReport(r=r, u=u, kappa=kappa, limit=limit, exact_sum=exact, bound=bound)


def nu_tau_violations(family: CongruenceFamily, table: SieveTable, limit: int) -> list[int]:
    """Squarefree d <= limit with nu(d) > tau_{k+1}(d), k + 1 the number of forms."""
    violations = []
    for d in range(1, limit + 1):
        factors = trial_factorize(d) if d > 1 else {}
        if any(e > 1 for e in factors.values()):
            continue
        nu = math.prod(nu_p(family, p).count for p in factors)
        if nu > tau_kappa(table, d, family.size):
            violations.append(d)
    return violations
