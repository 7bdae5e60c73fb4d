"""
Real primitive Dirichlet characters and complete character sums of
products of linear factors.

A character is identified by its fundamental discriminant d and evaluated as
the Kronecker symbol (d/n); its modulus is |d|. Moduli up to
CHAR_TABLE_THRESHOLD get a lazily built int8 value table over one period,
assembled as a product of the prime-discriminant components (-4, 8, -8, p*).
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .arith import SieveTable, is_prime_trial, is_squarefree, primes_up_to, trial_factorize
from .config import CHAR_TABLE_THRESHOLD
from .errors import (
    FactorizationError,
    InconsistencyError,
    InvalidDiscriminantError,
    OutOfRangeError,
    PreconditionError,
)
from .parallel import map_blocks, split_even

logger = logging.getLogger(__name__)


class Parity(Enum):
    EVEN = "even"
    ODD = "odd"


class SquareStatus(Enum):
    """Whether f is c * g(x)^2 modulo p."""

    SQUARE = "square"
    NON_SQUARE = "non_square"
    IDENTICALLY_ZERO = "identically_zero"


class PrimeSelector(Enum):
    """Which primes a prime sum runs over, by the value chi(p)."""

    SPLIT = 1
    RAMIFIED = 0
    INERT = -1


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n > 0."""
    if n <= 0 or n % 2 == 0:
        raise OutOfRangeError(f"Jacobi symbol needs an odd positive modulus, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers a, n."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    twos = (n & -n).bit_length() - 1
    if twos:
        if a % 2 == 0:
            return 0
        n >>= twos
        if twos % 2 and a % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * jacobi(a, n)


def discriminant_failure(d: int) -> str | None:
    """None when d is a fundamental discriminant, else the failed condition."""
    if d == 0:
        return "d must be nonzero"
    if d == 1:
        return None
    if d % 4 == 1:
        if not is_squarefree(d):
            return f"d = {d} is 1 mod 4 but not squarefree"
        return None
    if d % 4 == 0:
        m = d // 4
        if m % 4 not in (2, 3):
            return f"d = 4m with m = {m} requires m = 2 or 3 mod 4, got m = {m % 4} mod 4"
        if not is_squarefree(m):
            return f"d = 4m with m = {m} requires m squarefree"
        return None
    return f"d = {d} is {d % 4} mod 4; fundamental discriminants are 0 or 1 mod 4"


def is_fundamental_discriminant(d: int) -> bool:
    return discriminant_failure(d) is None


def prime_discriminant_factors(d: int) -> tuple[int, ...]:
    """Unique factorization of a fundamental discriminant into prime discriminants."""
    failure = discriminant_failure(d)
    if failure:
        raise InvalidDiscriminantError(failure)
    components = []
    rest = d
    for p in sorted(trial_factorize(d)):
        if p == 2:
            continue
        p_star = p if p % 4 == 1 else -p
        components.append(p_star)
        rest //= p_star
    if rest != 1:
        if rest not in (-4, 8, -8):
            raise FactorizationError(f"2-part {rest} of d = {d} is not -4, 8 or -8")
        components.insert(0, rest)
    return tuple(components)


def conductor_structure(q: int) -> tuple[int, int]:
    """Return (j, m) with q = 2^j * m, checking j <= 3 and m odd squarefree."""
    if q < 1:
        raise FactorizationError(f"modulus must be positive, got {q}")
    j = (q & -q).bit_length() - 1
    m = q >> j
    if j > 3:
        raise FactorizationError(f"modulus {q} has 2-adic valuation {j} > 3")
    if not is_squarefree(m):
        raise FactorizationError(f"odd part {m} of modulus {q} is not squarefree")
    return j, m


@dataclass(frozen=True)
class RealCharacter:
    """Real primitive character chi(n) = (d/n) modulo |d|."""

    discriminant: int
    modulus: int
    parity: Parity
    components: tuple[int, ...]

    def __call__(self, n: int) -> int:
        return eval_char(self, n)

    @property
    def is_principal(self) -> bool:
        return self.modulus == 1

    def component_characters(self) -> list["RealCharacter"]:
        return [real_primitive_character(c) for c in self.components]


@dataclass(frozen=True)
class LinearFactorPoly:
    """f(x) = prod (b_i + a_i x), stored as (b_i, a_i) pairs."""

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.factors:
            raise OutOfRangeError("a linear factor polynomial needs at least one factor")
        if all(a == 0 for _, a in self.factors):
            raise OutOfRangeError("at least one factor must have a nonzero x coefficient")

    @classmethod
    def of(cls, *pairs: tuple[int, int]) -> "LinearFactorPoly":
        return cls(tuple((int(b), int(a)) for b, a in pairs))

    @classmethod
    def parse(cls, text: str) -> "LinearFactorPoly":
        """Parse 'b:a,b:a,...' into factors (b + a x)."""
        pairs = []
        for chunk in text.split(","):
            try:
                b, a = chunk.split(":")
                pairs.append((int(b), int(a)))
            except ValueError as e:
                raise OutOfRangeError(f"malformed factor {chunk!r}, expected b:a") from e
        return cls(tuple(pairs))

    @property
    def degree(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        return "".join(f"({b}{a:+d}x)" for b, a in self.factors)


def real_primitive_character(d: int) -> RealCharacter:
    """The real primitive character attached to the fundamental discriminant d."""
    components = prime_discriminant_factors(d)
    q = abs(d)
    conductor_structure(q)
    return RealCharacter(
        discriminant=d,
        modulus=q,
        parity=Parity.EVEN if d > 0 else Parity.ODD,
        components=components,
    )


def legendre_character(p: int) -> RealCharacter:
    """The quadratic character modulo an odd prime p."""
    if p == 2 or not is_prime_trial(p):
        raise PreconditionError(f"Legendre character needs an odd prime, got {p}")
    return real_primitive_character(p if p % 4 == 1 else -p)


def _component_table(component: int) -> np.ndarray:
    q = abs(component)
    n = np.arange(q, dtype=np.int64)
    if component == -4:
        return np.array([0, 1, 0, -1], dtype=np.int8)
    if component == 8:
        return np.array([0, 1, 0, -1, 0, -1, 0, 1], dtype=np.int8)
    if component == -8:
        return np.array([0, 1, 0, 1, 0, -1, 0, -1], dtype=np.int8)
    residues = np.zeros(q, dtype=bool)
    residues[(n[1:] * n[1:]) % q] = True
    table = np.where(residues, 1, -1).astype(np.int8)
    table[0] = 0
    return table


@lru_cache(maxsize=128)
def _value_table(d: int) -> np.ndarray:
    q = abs(d)
    n = np.arange(q, dtype=np.int64)
    values = np.ones(q, dtype=np.int8)
    for component in prime_discriminant_factors(d):
        values *= _component_table(component)[n % abs(component)]
    values.flags.writeable = False
    logger.debug("cached value table for d=%d (modulus %d)", d, q)
    return values


def char_value_table(chi: RealCharacter) -> np.ndarray | None:
    """Read-only int8 table of chi over one period, or None above the threshold."""
    if chi.modulus > CHAR_TABLE_THRESHOLD:
        return None
    return _value_table(chi.discriminant)


def eval_char(chi: RealCharacter, n: int) -> int:
    """chi(n) for any integer n."""
    r = n % chi.modulus
    table = char_value_table(chi)
    if table is not None:
        return int(table[r])
    return kronecker(chi.discriminant, r)


def char_values(chi: RealCharacter, values: np.ndarray) -> np.ndarray:
    """Vectorised chi over an integer array."""
    residues = np.asarray(values, dtype=np.int64) % chi.modulus
    table = char_value_table(chi)
    if table is not None:
        return table[residues]
    return np.array(
        [kronecker(chi.discriminant, int(r)) for r in residues], dtype=np.int8
    )


def char_sum_poly(chi: RealCharacter, f: LinearFactorPoly, threads: int = 1) -> int:
    """Exact sum over n = 0, ..., q-1 of chi(f(n)), using chi(f(n)) = prod chi(b + a n)."""
    q = chi.modulus
    reduced = [(b % q, a % q) for b, a in f.factors]

    def kernel(lo: int, hi: int) -> int:
        n = np.arange(lo, hi, dtype=np.int64)
        product = np.ones(n.size, dtype=np.int8)
        for b, a in reduced:
            product *= char_values(chi, (b + a * n) % q)
        return int(product.sum(dtype=np.int64))

    return sum(map_blocks(kernel, split_even(0, q, threads), threads))


def square_status(f: LinearFactorPoly, p: int) -> SquareStatus:
    """Classify f modulo p by the multiplicities of its roots.

    Factors with p | a_i are constants mod p; a factor with p | a_i and
    p | b_i makes f vanish identically.
    """
    roots: Counter[int] = Counter()
    for b, a in f.factors:
        a %= p
        b %= p
        if a == 0:
            if b == 0:
                return SquareStatus.IDENTICALLY_ZERO
            continue
        roots[(-b * pow(a, -1, p)) % p] += 1
    if all(mult % 2 == 0 for mult in roots.values()):
        return SquareStatus.SQUARE
    return SquareStatus.NON_SQUARE


def is_square_mod_p(f: LinearFactorPoly, p: int) -> bool:
    """True iff f = c * g(x)^2 mod p (the zero polynomial counts, with c = 0)."""
    return square_status(f, p) is not SquareStatus.NON_SQUARE


def distinct_roots_mod_p(f: LinearFactorPoly, p: int) -> int:
    return len(
        {(-b * pow(a, -1, p)) % p for b, a in f.factors if a % p}
    )


@dataclass(frozen=True)
class WeilReport:
    modulus: int
    poly: str
    char_sum: int
    distinct_roots: int
    bound: float
    holds: bool


def weil_bound_check(chi: RealCharacter, f: LinearFactorPoly) -> WeilReport:
    """Compare |sum chi(f(n))| with (m - 1) sqrt(p) for a non-square f."""
    p = chi.modulus
    if not is_prime_trial(p):
        raise PreconditionError(f"Weil bound check needs a prime modulus, got {p}")
    status = square_status(f, p)
    if status is not SquareStatus.NON_SQUARE:
        raise PreconditionError(
            f"{f} is {status.value.replace('_', ' ')} mod {p}; the Weil bound does not apply"
        )
    m = distinct_roots_mod_p(f, p)
    total = char_sum_poly(chi, f)
    return WeilReport(
        modulus=p,
        poly=str(f),
        char_sum=total,
        distinct_roots=m,
        bound=(m - 1) * math.sqrt(p),
        # |S| <= (m-1) sqrt(p)  <=>  S^2 <= (m-1)^2 p
        holds=total * total <= (m - 1) ** 2 * p,
    )


@dataclass(frozen=True)
class CrtReport:
    modulus: int
    poly: str
    direct_sum: int
    factored_moduli: tuple[int, ...]
    component_sums: tuple[int, ...]
    bound: float
    holds: bool


def crt_char_sum(chi: RealCharacter, f: LinearFactorPoly) -> CrtReport:
    """Evaluate the complete sum directly and as a product over prime-power moduli.

    With q = prod q_i and chi = prod chi_i, writing n = sum a_i q/q_i gives
    sum_n chi(f(n)) = prod_i sum_{a_i mod q_i} chi_i(f(a_i q/q_i)).
    """
    q = chi.modulus
    conductor_structure(q)
    direct = char_sum_poly(chi, f)

    moduli = []
    sums = []
    for component in chi.components:
        chi_i = real_primitive_character(component)
        q_i = chi_i.modulus
        cofactor = q // q_i
        # f(a * cofactor) has factors b + (a_f * cofactor) x
        f_i = LinearFactorPoly(tuple((b, a * cofactor) for b, a in f.factors))
        moduli.append(q_i)
        sums.append(char_sum_poly(chi_i, f_i))

    factored = math.prod(sums)
    if factored != direct:
        raise InconsistencyError(
            f"CRT product {factored} != direct sum {direct} for modulus {q}, f = {f}"
        )
    s = len(moduli)
    bound = (f.degree - 1) ** s * math.sqrt(q)
    return CrtReport(
        modulus=q,
        poly=str(f),
        direct_sum=direct,
        factored_moduli=tuple(moduli),
        component_sums=tuple(sums),
        bound=bound,
        holds=abs(direct) <= bound,
    )


def prime_log_sum(
    chi: RealCharacter,
    x: int,
    table: SieveTable,
    which: PrimeSelector = PrimeSelector.SPLIT,
) -> float:
    """sum_{p <= x, chi(p) = which} log(p)/p, correctly rounded (math.fsum)."""
    if x > table.limit:
        raise OutOfRangeError(f"x={x} exceeds the sieve table limit {table.limit}")
    primes = primes_up_to(table, x)
    selected = primes[char_values(chi, primes) == which.value].astype(np.float64)
    return math.fsum((np.log(selected) / selected).tolist())


def prime_log_sum_all(x: int, table: SieveTable) -> float:
    """sum_{p <= x} log(p)/p, the Mertens-type reference for the character splits."""
    if x > table.limit:
        raise OutOfRangeError(f"x={x} exceeds the sieve table limit {table.limit}")
    primes = primes_up_to(table, x).astype(np.float64)
    return math.fsum((np.log(primes) / primes).tolist())
