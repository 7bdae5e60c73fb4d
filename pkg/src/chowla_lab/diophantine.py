"""
Smith normal form over the integers and the lcm-parametrised solution of

    a_i * b_i = a_0 * b_0 + h_i,   i = 1, ..., k.

Entries are Python integers; every product and sum is checked against the
signed WIDE_INT_BITS capacity so pivot growth fails loudly.

Two decompositions are offered. CANONICAL is the usual Smith form with
d_1 | d_2 | ... and unimodular U, V. BANDED_RECURSION runs the banded
elimination (one Bezout column step plus one scaled row step per equation)
and produces the diagonal gcd(a_0...a_j, a_{j+1} d_{j-1}); its U scales rows,
so det U is the product of the earlier pivots rather than +-1. Both make
U A X = U C equivalent to A X = C, since U is nonsingular.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
import numpy as np

from .arith import checked, lcm_many
from .errors import InconsistencyError, OutOfRangeError, PreconditionError

logger = logging.getLogger(__name__)


class SnfMode(Enum):
    CANONICAL = "canonical"
    BANDED_RECURSION = "banded"


@dataclass(frozen=True)
class IntMatrix:
    """Rectangular integer matrix stored as a tuple of row tuples."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.rows or not self.rows[0]:
            raise OutOfRangeError("matrix must have at least one row and one column")
        width = len(self.rows[0])
        for row in self.rows:
            if len(row) != width:
                raise OutOfRangeError(f"ragged matrix: row lengths {[len(r) for r in self.rows]}")
            for value in row:
                checked(value)

    @classmethod
    def of(cls, values) -> "IntMatrix":
        return cls(tuple(tuple(int(v) for v in row) for row in values))

    @classmethod
    def identity(cls, size: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(size)) for i in range(size)))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    def column(self, j: int) -> list[int]:
        return [row[j] for row in self.rows]

    def diagonal(self) -> list[int]:
        m, n = self.shape
        return [self.rows[i][i] for i in range(min(m, n))]

    def is_diagonal(self) -> bool:
        return all(v == 0 for i, row in enumerate(self.rows) for j, v in enumerate(row) if i != j)

    def tolist(self) -> list[list[int]]:
        return [list(row) for row in self.rows]

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return matmul(self, other)


def matmul(left: IntMatrix, right: IntMatrix) -> IntMatrix:
    m, inner = left.shape
    inner_r, n = right.shape
    if inner != inner_r:
        raise OutOfRangeError(f"cannot multiply {left.shape} by {right.shape}")
    cols = [right.column(j) for j in range(n)]
    return IntMatrix(
        tuple(
            tuple(checked(sum(a * b for a, b in zip(row, col))) for col in cols)
            for row in left.rows
        )
    )


def determinant(matrix: IntMatrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n, n_cols = matrix.shape
    if n != n_cols:
        raise OutOfRangeError(f"determinant needs a square matrix, got {matrix.shape}")
    work = matrix.tolist()
    sign = 1
    previous = 1
    for k in range(n - 1):
        if work[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if work[i][k] != 0), None)
            if swap is None:
                return 0
            work[k], work[swap] = work[swap], work[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                work[i][j] = (work[i][j] * work[k][k] - work[i][k] * work[k][j]) // previous
        previous = work[k][k]
    return sign * work[n - 1][n - 1]


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    r0, r1, s0, s1, t0, t1 = a, b, 1, 0, 0, 1
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0 < 0:
        r0, s0, t0 = -r0, -s0, -t0
    return r0, s0, t0


@dataclass(frozen=True)
class SnfDecomposition:
    """U A V = B with B zero off the diagonal."""

    A: IntMatrix
    U: IntMatrix
    B: IntMatrix
    V: IntMatrix
    mode: SnfMode

    @property
    def diagonal(self) -> list[int]:
        return self.B.diagonal()

    def verify(self) -> None:
        """Check U A V = B, the shape of B and the determinants of U and V."""
        if self.U @ self.A @ self.V != self.B:
            raise InconsistencyError(f"U A V != B for {self.A.tolist()}")
        if not self.B.is_diagonal():
            raise InconsistencyError(f"B is not diagonal: {self.B.tolist()}")
        if abs(determinant(self.V)) != 1:
            raise InconsistencyError(f"V is not unimodular (det {determinant(self.V)})")
        det_u = determinant(self.U)
        if self.mode is SnfMode.CANONICAL:
            if abs(det_u) != 1:
                raise InconsistencyError(f"U is not unimodular (det {det_u})")
            diag = [d for d in self.diagonal if d]
            if any(b % a for a, b in zip(diag, diag[1:])):
                raise InconsistencyError(f"divisibility chain broken: {self.diagonal}")
        else:
            expected = math.prod(self.diagonal[:-1])
            if abs(det_u) != expected:
                raise InconsistencyError(f"det U = {det_u}, expected +-{expected}")


class _Workspace:
    """Mutable copies of B, U, V with the elementary operations applied in lockstep."""

    def __init__(self, A: IntMatrix):
        self.m, self.n = A.shape
        self.B = A.tolist()
        self.U = IntMatrix.identity(self.m).tolist()
        self.V = IntMatrix.identity(self.n).tolist()

    def swap_rows(self, i: int, j: int) -> None:
        if i != j:
            self.B[i], self.B[j] = self.B[j], self.B[i]
            self.U[i], self.U[j] = self.U[j], self.U[i]

    def swap_cols(self, i: int, j: int) -> None:
        if i != j:
            for row in self.B + self.V:
                row[i], row[j] = row[j], row[i]

    def combine_rows(self, target: int, scale: int, source: int, factor: int) -> None:
        """row[target] = scale * row[target] + factor * row[source]."""
        for mat in (self.B, self.U):
            t, s = mat[target], mat[source]
            mat[target] = [checked(scale * a + factor * b) for a, b in zip(t, s)]

    def add_col(self, target: int, source: int, factor: int) -> None:
        """col[target] += factor * col[source]."""
        for row in self.B + self.V:
            row[target] = checked(row[target] + factor * row[source])

    def mix_cols(self, i: int, j: int, p: int, q: int, r: int, s: int) -> None:
        """(col_i, col_j) <- (p col_i + r col_j, q col_i + s col_j)."""
        for row in self.B + self.V:
            a, b = row[i], row[j]
            row[i], row[j] = checked(p * a + r * b), checked(q * a + s * b)

    def negate_row(self, i: int) -> None:
        self.B[i] = [-v for v in self.B[i]]
        self.U[i] = [-v for v in self.U[i]]

    def result(self, A: IntMatrix, mode: SnfMode) -> SnfDecomposition:
        return SnfDecomposition(
            A=A, U=IntMatrix.of(self.U), B=IntMatrix.of(self.B), V=IntMatrix.of(self.V), mode=mode
        )


def _smallest_pivot(B: list[list[int]], t: int) -> tuple[int, int] | None:
    best = None
    for i in range(t, len(B)):
        for j in range(t, len(B[0])):
            v = abs(B[i][j])
            if v and (best is None or v < best[0]):
                best = (v, i, j)
    return None if best is None else (best[1], best[2])


def _canonical(A: IntMatrix) -> SnfDecomposition:
    w = _Workspace(A)
    B = w.B
    for t in range(min(w.m, w.n)):
        while True:
            pivot = _smallest_pivot(w.B, t)
            if pivot is None:
                return w.result(A, SnfMode.CANONICAL)
            w.swap_rows(t, pivot[0])
            w.swap_cols(t, pivot[1])
            B = w.B
            reduced = True
            for i in range(t + 1, w.m):
                q = B[i][t] // B[t][t]
                if q:
                    w.combine_rows(i, 1, t, -q)
                reduced &= B[i][t] == 0
            for j in range(t + 1, w.n):
                q = B[t][j] // B[t][t]
                if q:
                    w.add_col(j, t, -q)
                reduced &= B[t][j] == 0
            if not reduced:
                continue
            offender = next(
                (
                    i
                    for i in range(t + 1, w.m)
                    for j in range(t + 1, w.n)
                    if B[i][j] % B[t][t]
                ),
                None,
            )
            if offender is None:
                break
            w.combine_rows(t, 1, offender, 1)
        if B[t][t] < 0:
            w.negate_row(t)
    return w.result(A, SnfMode.CANONICAL)


def _banded_coefficients(A: IntMatrix) -> list[int] | None:
    """Recover (a_0, ..., a_k) when A has the k x (k+1) banded shape rows (a_j, -a_{j+1})."""
    k, n = A.shape
    if n != k + 1:
        return None
    a = [A.rows[0][0]] + [-A.rows[j][j + 1] for j in range(k)]
    for j, row in enumerate(A.rows):
        for col, value in enumerate(row):
            expected = a[j] if col == j else -a[j + 1] if col == j + 1 else 0
            if value != expected:
                return None
    return a if all(v > 0 for v in a) else None


def _banded_recursion(A: IntMatrix) -> SnfDecomposition:
    if _banded_coefficients(A) is None:
        raise PreconditionError(
            "banded mode needs the banded k x (k+1) matrix with rows (a_j, -a_{j+1})"
        )
    w = _Workspace(A)
    k = w.m
    for j in range(k):
        alpha, beta = w.B[j][j], -w.B[j][j + 1]
        g, x, y = xgcd(alpha, beta)
        # row j: (alpha, -beta) -> (g, 0)
        w.mix_cols(j, j + 1, x, beta // g, -y, alpha // g)
        if j + 1 < k:
            # clear below the pivot: row_{j+1} <- g row_{j+1} - B[j+1][j] row_j
            w.combine_rows(j + 1, g, j, -w.B[j + 1][j])
    logger.debug("banded recursion diagonal %s", [w.B[j][j] for j in range(k)])
    return w.result(A, SnfMode.BANDED_RECURSION)


def smith_normal_form(A: IntMatrix, mode: SnfMode = SnfMode.CANONICAL) -> SnfDecomposition:
    """Decompose U A V = B and verify the result exactly."""
    if all(v == 0 for row in A.rows for v in row):
        raise OutOfRangeError("Smith normal form of the zero matrix is not supported")
    if mode is SnfMode.CANONICAL:
        decomposition = _canonical(A)
    else:
        decomposition = _banded_recursion(A)
    decomposition.verify()
    return decomposition


def recursion_diagonal(a: list[int]) -> list[int]:
    """d_0 = gcd(a_0, a_1), d_j = gcd(a_0 ... a_j, a_{j+1} d_{j-1})."""
    diagonal = [math.gcd(a[0], a[1])]
    prefix = a[0]
    for j in range(1, len(a) - 1):
        prefix = checked(prefix * a[j])
        diagonal.append(math.gcd(prefix, checked(a[j + 1] * diagonal[-1])))
    return diagonal


@dataclass(frozen=True)
class LinearSolution:
    """Particular solution and integer kernel basis of A X = C."""

    particular: tuple[int, ...]
    kernel: tuple[tuple[int, ...], ...]


def solve_linear(
    A: IntMatrix, C: list[int], decomposition: SnfDecomposition | None = None
) -> LinearSolution | None:
    """Integer solutions of A X = C through B Y = U C, X = V Y; None if unsolvable."""
    decomposition = decomposition or smith_normal_form(A)
    m, n = A.shape
    if len(C) != m:
        raise OutOfRangeError(f"right-hand side has {len(C)} entries, expected {m}")
    D = [checked(sum(u * c for u, c in zip(row, C))) for row in decomposition.U.rows]
    diagonal = decomposition.diagonal
    Y = [0] * n
    for i in range(m):
        b = diagonal[i] if i < n else 0
        if b == 0:
            if D[i] != 0:
                return None
            continue
        if D[i] % b:
            return None
        Y[i] = D[i] // b
    V = decomposition.V
    particular = tuple(checked(sum(v * y for v, y in zip(row, Y))) for row in V.rows)
    free = [j for j in range(n) if j >= len(diagonal) or diagonal[j] == 0]
    kernel = tuple(tuple(V.column(j)) for j in free)
    return LinearSolution(particular=particular, kernel=kernel)


@dataclass(frozen=True)
class DiophantineSystem:
    """a_i b_i = a_0 b_0 + h_i for i = 1..k."""

    a: tuple[int, ...]
    h: tuple[int, ...]

    def __post_init__(self):
        if len(self.a) < 2:
            raise OutOfRangeError(f"need a_0 and at least one a_i, got a = {self.a}")
        if len(self.h) != len(self.a) - 1:
            raise OutOfRangeError(
                f"need one shift per equation: {len(self.a) - 1} expected, got {len(self.h)}"
            )
        if any(v < 1 for v in self.a):
            raise OutOfRangeError(f"coefficients must be positive, got a = {self.a}")

    @classmethod
    def of(cls, a, h) -> "DiophantineSystem":
        return cls(tuple(int(v) for v in a), tuple(int(v) for v in h))

    @property
    def k(self) -> int:
        return len(self.h)

    def is_solution(self, b) -> bool:
        return all(
            self.a[i] * b[i] == self.a[0] * b[0] + self.h[i - 1] for i in range(1, self.k + 1)
        )

    def necessary_condition(self) -> bool:
        """(a_i, a_j) | (h_i - h_j) for all pairs, with h_0 = 0."""
        shifts = (0,) + self.h
        return all(
            (shifts[i] - shifts[j]) % math.gcd(self.a[i], self.a[j]) == 0
            for i in range(len(self.a))
            for j in range(i + 1, len(self.a))
        )


def system_matrix(system: DiophantineSystem) -> tuple[IntMatrix, list[int]]:
    """Banded form: row j reads a_j b_j - a_{j+1} b_{j+1} = h_j - h_{j+1}, h_0 = 0."""
    k = system.k
    a = system.a
    rows = []
    for j in range(k):
        row = [0] * (k + 1)
        row[j] = a[j]
        row[j + 1] = -a[j + 1]
        rows.append(row)
    shifts = (0,) + system.h
    C = [shifts[j] - shifts[j + 1] for j in range(k)]
    return IntMatrix.of(rows), C


@dataclass(frozen=True)
class SolutionFamily:
    """b_i = particular[i] + m * step[i] for all integers m."""

    particular: tuple[int, ...]
    step: tuple[int, ...]

    def __post_init__(self):
        if len(self.particular) != len(self.step):
            raise OutOfRangeError("particular and step must have the same length")
        if any(s < 1 for s in self.step):
            raise OutOfRangeError(f"steps must be positive, got {self.step}")

    def member(self, m: int) -> tuple[int, ...]:
        return tuple(b + m * s for b, s in zip(self.particular, self.step))

    def members_in_box(self, lo: int, hi: int) -> list[tuple[int, ...]]:
        """Members with lo <= b_0 <= hi, ordered by b_0."""
        b0, s0 = self.particular[0], self.step[0]
        first = -((b0 - lo) // s0)
        last = (hi - b0) // s0
        return [self.member(m) for m in range(first, last + 1)]


@dataclass(frozen=True)
class SolveOutcome:
    system: DiophantineSystem
    family: SolutionFamily | None
    necessary_condition: bool
    lcm: int
    mode: SnfMode

    @property
    def solvable(self) -> bool:
        return self.family is not None


def solve_system(
    system: DiophantineSystem, mode: SnfMode = SnfMode.CANONICAL
) -> SolveOutcome:
    """Solve the system through the Smith normal form of its banded matrix."""
    A, C = system_matrix(system)
    decomposition = smith_normal_form(A, mode)
    lcm = lcm_many(list(system.a))
    solution = solve_linear(A, C, decomposition)
    necessary = system.necessary_condition()

    family = None
    if solution is not None:
        if len(solution.kernel) != 1:
            raise InconsistencyError(
                f"banded system must have a one-dimensional kernel, got {len(solution.kernel)}"
            )
        step = solution.kernel[0]
        if step[0] < 0:
            step = tuple(-s for s in step)
        expected = tuple(lcm // a for a in system.a)
        if step != expected:
            raise InconsistencyError(f"kernel {step} differs from lcm/a_i = {expected}")
        if not system.is_solution(solution.particular):
            raise InconsistencyError(f"particular {solution.particular} does not solve {system}")
        family = SolutionFamily(particular=solution.particular, step=step)
    logger.debug("solved %s: solvable=%s necessary=%s", system, family is not None, necessary)
    return SolveOutcome(
        system=system, family=family, necessary_condition=necessary, lcm=lcm, mode=mode
    )


def minimal_positive_particular(family: SolutionFamily) -> SolutionFamily:
    """Translate so every b_i* > 0 and b_i* - step_i <= 0 for at least one i."""
    # smallest m with b_i + m s_i >= 1 for every i
    shift = max(-((b - 1) // s) for b, s in zip(family.particular, family.step))
    return SolutionFamily(particular=family.member(shift), step=family.step)


def brute_force_solutions(system: DiophantineSystem, lo: int, hi: int) -> list[tuple[int, ...]]:
    """Every integer solution with lo <= b_0 <= hi, by a direct scan over b_0."""
    if hi < lo:
        return []
    b0 = np.arange(lo, hi + 1, dtype=np.int64)
    ok = np.ones(b0.size, dtype=bool)
    columns = [b0]
    for a_i, h_i in zip(system.a[1:], system.h):
        rhs = system.a[0] * b0 + h_i
        ok &= rhs % a_i == 0
        columns.append(rhs // a_i)
    stacked = np.stack(columns, axis=1)[ok]
    return [tuple(int(v) for v in row) for row in stacked]
