"""
Tests for the Smith normal form and the parametrised Diophantine solver.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chowla_lab.arith import lcm_lower_bound, lcm_many
from chowla_lab.diophantine import (
    DiophantineSystem,
    IntMatrix,
    SnfMode,
    SolutionFamily,
    brute_force_solutions,
    determinant,
    minimal_positive_particular,
    recursion_diagonal,
    smith_normal_form,
    solve_linear,
    solve_system,
    system_matrix,
    xgcd,
)
from chowla_lab.errors import OutOfRangeError, PreconditionError, WideIntegerOverflow

systems = st.integers(min_value=1, max_value=4).flatmap(
    lambda k: st.tuples(
        st.lists(st.integers(1, 30), min_size=k + 1, max_size=k + 1),
        st.lists(st.integers(-20, 20), min_size=k, max_size=k),
    )
)


class TestIntMatrix:
    def test_shape_and_diagonal(self):
        m = IntMatrix.of([[1, 2, 3], [4, 5, 6]])
        assert m.shape == (2, 3)
        assert m.diagonal() == [1, 5]
        assert m.column(2) == [3, 6]
        assert not m.is_diagonal()

    def test_matmul(self):
        a = IntMatrix.of([[1, 2], [3, 4]])
        assert (a @ IntMatrix.identity(2)) == a
        assert (a @ a).tolist() == [[7, 10], [15, 22]]

    def test_ragged_rejected(self):
        with pytest.raises(OutOfRangeError):
            IntMatrix.of([[1, 2], [3]])

    def test_wide_entries_rejected(self):
        with pytest.raises(WideIntegerOverflow):
            IntMatrix.of([[2**130]])

    def test_determinant(self):
        assert determinant(IntMatrix.of([[2, 0], [0, 3]])) == 6
        assert determinant(IntMatrix.of([[0, 1], [1, 0]])) == -1
        assert determinant(IntMatrix.of([[1, 2], [2, 4]])) == 0
        assert determinant(IntMatrix.of([[2, -1, 0], [-1, 2, -1], [0, -1, 2]])) == 4

    @pytest.mark.parametrize("a, b", [(240, 46), (-12, 18), (7, 0), (0, 5), (2, 2)])
    def test_xgcd(self, a, b):
        g, x, y = xgcd(a, b)
        assert g == math.gcd(a, b)
        assert a * x + b * y == g


class TestCanonicalForm:
    def test_textbook_example(self):
        a = IntMatrix.of([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
        snf = smith_normal_form(a)
        assert snf.diagonal == [2, 6, 12]

    def test_two_by_two(self):
        snf = smith_normal_form(IntMatrix.of([[1, 2], [3, 4]]))
        assert snf.diagonal == [1, 2]

    def test_rectangular(self):
        snf = smith_normal_form(IntMatrix.of([[2, -3, 0], [0, 3, -5]]))
        assert snf.diagonal == [1, 1]
        assert snf.U @ snf.A @ snf.V == snf.B

    def test_zero_matrix_rejected(self):
        with pytest.raises(OutOfRangeError):
            smith_normal_form(IntMatrix.of([[0, 0], [0, 0]]))

    def test_rank_deficient(self):
        snf = smith_normal_form(IntMatrix.of([[2, 4], [1, 2]]))
        assert snf.diagonal == [1, 0]

    @given(
        st.lists(
            st.lists(st.integers(-40, 40), min_size=3, max_size=3), min_size=2, max_size=3
        ).filter(lambda rows: any(any(r) for r in rows))
    )
    @settings(max_examples=150, deadline=None)
    def test_invariants(self, rows):
        snf = smith_normal_form(IntMatrix.of(rows))
        assert snf.U @ snf.A @ snf.V == snf.B
        assert abs(determinant(snf.U)) == 1
        assert abs(determinant(snf.V)) == 1
        nonzero = [d for d in snf.diagonal if d]
        assert all(d > 0 for d in nonzero)
        assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))


class TestBandedRecursion:
    def test_diagonal_matches_recursion(self):
        system = DiophantineSystem.of([4, 6, 10, 15], [1, 2, 3])
        A, _ = system_matrix(system)
        snf = smith_normal_form(A, SnfMode.BANDED_RECURSION)
        assert snf.diagonal == recursion_diagonal([4, 6, 10, 15])

    def test_differs_from_canonical(self):
        A, _ = system_matrix(DiophantineSystem.of([2, 2, 2], [0, 0]))
        assert smith_normal_form(A, SnfMode.BANDED_RECURSION).diagonal == [2, 4]
        assert smith_normal_form(A).diagonal == [2, 2]

    def test_row_scaling_determinant(self):
        A, _ = system_matrix(DiophantineSystem.of([2, 2, 2], [0, 0]))
        snf = smith_normal_form(A, SnfMode.BANDED_RECURSION)
        assert abs(determinant(snf.U)) == 2
        assert abs(determinant(snf.V)) == 1

    def test_needs_banded_matrix(self):
        with pytest.raises(PreconditionError):
            smith_normal_form(IntMatrix.of([[1, 2], [3, 4]]), SnfMode.BANDED_RECURSION)

    @given(st.lists(st.integers(1, 30), min_size=2, max_size=5))
    @settings(max_examples=100, deadline=None)
    def test_diagonal_property(self, a):
        A, _ = system_matrix(DiophantineSystem.of(a, [0] * (len(a) - 1)))
        assert smith_normal_form(A, SnfMode.BANDED_RECURSION).diagonal == recursion_diagonal(a)


class TestSolveLinear:
    def test_single_equation(self):
        A = IntMatrix.of([[2, 3]])
        solution = solve_linear(A, [7])
        x, y = solution.particular
        assert 2 * x + 3 * y == 7
        (kernel,) = solution.kernel
        assert 2 * kernel[0] + 3 * kernel[1] == 0
        assert abs(kernel[0]) == 3

    def test_unsolvable(self):
        assert solve_linear(IntMatrix.of([[2, 4]]), [3]) is None

    def test_rhs_length_checked(self):
        with pytest.raises(OutOfRangeError):
            solve_linear(IntMatrix.of([[2, 4]]), [3, 1])


class TestSystem:
    def test_validation(self):
        with pytest.raises(OutOfRangeError):
            DiophantineSystem.of([2], [])
        with pytest.raises(OutOfRangeError):
            DiophantineSystem.of([2, 3], [1, 2])
        with pytest.raises(OutOfRangeError):
            DiophantineSystem.of([2, 0], [1])

    def test_system_matrix(self):
        A, C = system_matrix(DiophantineSystem.of([2, 3, 5], [1, 4]))
        assert A.tolist() == [[2, -3, 0], [0, 3, -5]]
        assert C == [-1, -3]

    def test_two_three(self):
        outcome = solve_system(DiophantineSystem.of([2, 3], [1]))
        assert outcome.solvable
        assert outcome.lcm == 6
        assert outcome.family.step == (3, 2)
        family = minimal_positive_particular(outcome.family)
        assert family.particular == (1, 1)

    def test_unsolvable_two_four(self):
        outcome = solve_system(DiophantineSystem.of([2, 4], [1]))
        assert not outcome.solvable
        assert not outcome.necessary_condition
        assert brute_force_solutions(outcome.system, -100, 100) == []

    def test_equal_coefficients(self):
        outcome = solve_system(DiophantineSystem.of([1, 1, 1], [1, 2]))
        assert outcome.family.step == (1, 1, 1)
        assert outcome.family.member(0)[1] - outcome.family.member(0)[0] == 1

    def test_lcm_step_and_lower_bound(self):
        a = [6, 10, 15]
        outcome = solve_system(DiophantineSystem.of(a, [4, 9]))
        assert outcome.solvable
        assert outcome.family.step == tuple(30 // v for v in a)
        assert lcm_lower_bound(a) <= lcm_many(a)

    @pytest.mark.parametrize("mode", list(SnfMode))
    def test_modes_agree(self, mode):
        system = DiophantineSystem.of([4, 6, 10], [2, 6])
        outcome = solve_system(system, mode)
        assert outcome.mode is mode
        assert outcome.family.members_in_box(-200, 200) == brute_force_solutions(system, -200, 200)

    @given(systems)
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, data):
        a, h = data
        system = DiophantineSystem.of(a, h)
        outcome = solve_system(system)
        expected = brute_force_solutions(system, -2000, 2000)
        found = outcome.family.members_in_box(-2000, 2000) if outcome.solvable else []
        assert found == expected
        if outcome.solvable:
            assert outcome.necessary_condition
            assert outcome.family.step == tuple(lcm_many(a) // v for v in a)


class TestSolutionFamily:
    def test_positive_steps_required(self):
        with pytest.raises(OutOfRangeError):
            SolutionFamily(particular=(1, 2), step=(0, 1))

    def test_members_in_box(self):
        family = SolutionFamily(particular=(1, 1), step=(3, 2))
        assert family.members_in_box(0, 10) == [(1, 1), (4, 3), (7, 5), (10, 7)]
        assert family.members_in_box(2, 3) == []

    def test_minimal_positive(self):
        family = minimal_positive_particular(SolutionFamily(particular=(-5, -3), step=(3, 2)))
        assert family.particular == (1, 1)
        shifted = minimal_positive_particular(SolutionFamily(particular=(100, 67), step=(3, 2)))
        assert shifted.particular == (1, 1)
        assert any(b - s <= 0 for b, s in zip(shifted.particular, shifted.step))
