import random
from fractions import Fraction
from math import prod

import pytest

from src.errors import SingularMatrixError
from src.exact_algebra import (
    cokernel_order,
    det_exact,
    in_lattice,
    int_matrix,
    inverse_exact,
    invariant_factors,
    lattice_solve,
    smith_normal_form,
    solve_exact,
    to_int_rows,
    unimodular_inverse,
)
from src.grid_domain import reduced_laplacian

from tests.conftest import square


def test_smith_normal_form_multiplies_back():
    A = int_matrix([[2, 4], [6, 8]])
    snf = smith_normal_form(A)
    assert snf.diagonal == [2, 4]
    assert to_int_rows(snf.U * A * snf.V) == to_int_rows(snf.S)
    assert snf.rank == 2


def test_smith_normal_form_rectangular_and_singular():
    A = int_matrix([[1, 2, 3], [2, 4, 6]])
    snf = smith_normal_form(A)
    assert snf.diagonal == [1, 0]
    assert snf.invariant_factors == []


def test_invariant_factors_of_laplacian():
    assert invariant_factors(reduced_laplacian(square(1))) == [4]
    factors = [d for d in invariant_factors(reduced_laplacian(square(3))) if d > 1]
    assert factors[-1] % factors[0] == 0
    product = 1
    for d in factors:
        product *= d
    assert product == 100352


def test_cokernel_order():
    assert cokernel_order(int_matrix([[2, 0], [0, 3]])) == 6
    assert cokernel_order(int_matrix([[1, 2], [2, 4]])) is None


def test_det_exact():
    assert abs(det_exact(reduced_laplacian(square(3)))) == 100352
    assert det_exact(int_matrix([], 0)) == 1
    with pytest.raises(ValueError):
        det_exact(int_matrix([[1, 2]]))


def test_solve_exact_returns_fractions():
    x = solve_exact(int_matrix([[2, 0], [0, 4]]), [1, 1])
    assert x == [Fraction(1, 2), Fraction(1, 4)]


def test_solve_exact_singular():
    with pytest.raises(SingularMatrixError):
        solve_exact(int_matrix([[1, 2], [2, 4]]), [1, 1])


def test_inverse_exact():
    inverse = inverse_exact(int_matrix([[2, 1], [1, 1]]))
    assert inverse == [[1, -1], [-1, 2]]


def test_lattice_solve():
    A = int_matrix([[2, 0], [0, 3]])
    assert lattice_solve(A, [4, 9]) == [2, 3]
    assert lattice_solve(A, [3, 9]) is None
    assert in_lattice(A, [0, 3])


def test_lattice_solve_underdetermined():
    A = int_matrix([[2, 4, 0]])
    y = lattice_solve(A, [6])
    assert y is not None
    assert 2 * y[0] + 4 * y[1] == 6
    assert lattice_solve(A, [3]) is None


def test_unimodular_inverse():
    U = int_matrix([[1, 1], [0, 1]])
    assert unimodular_inverse(U) == [[1, -1], [0, 1]]


def _random_matrix(rng, rows, cols):
    return [[rng.randint(-9, 9) for _ in range(cols)] for _ in range(rows)]


def test_smith_normal_form_properties():
    rng = random.Random(5)
    for _ in range(40):
        rows, cols = rng.randint(1, 8), rng.randint(1, 8)
        A = int_matrix(_random_matrix(rng, rows, cols), cols)
        snf = smith_normal_form(A)
        assert to_int_rows(snf.U * A * snf.V) == to_int_rows(snf.S)
        assert abs(det_exact(snf.U)) == 1
        assert abs(det_exact(snf.V)) == 1
        S = to_int_rows(snf.S)
        assert all(S[i][j] == 0 for i in range(rows) for j in range(cols) if i != j)
        diagonal = snf.diagonal
        nonzero = diagonal[: snf.rank]
        assert all(d > 0 for d in nonzero)
        assert all(d == 0 for d in diagonal[snf.rank :])
        assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
        assert [d for d in invariant_factors(A) if d] == nonzero
        if rows == cols:
            assert abs(det_exact(A)) == prod(diagonal)


def test_lattice_solve_single_row():
    A = int_matrix([[2, 3]])
    y = lattice_solve(A, [1])
    assert y is not None
    assert 2 * y[0] + 3 * y[1] == 1


def test_lattice_solve_recovers_solvable_systems():
    rng = random.Random(9)
    for _ in range(30):
        rows, cols = rng.randint(1, 6), rng.randint(1, 6)
        entries = _random_matrix(rng, rows, cols)
        x = [rng.randint(-5, 5) for _ in range(cols)]
        b = [sum(a * v for a, v in zip(row, x)) for row in entries]
        y = lattice_solve(int_matrix(entries, cols), b)
        assert y is not None
        assert [sum(a * v for a, v in zip(row, y)) for row in entries] == b
