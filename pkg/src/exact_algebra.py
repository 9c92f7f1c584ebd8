"""Exact integer and rational linear algebra on top of sympy's DomainMatrix."""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Optional, Sequence

from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError
from sympy.polys.matrices.normalforms import invariant_factors as _invariant_factors
from sympy.polys.matrices.normalforms import smith_normal_decomp

from src.errors import InvariantError, SingularMatrixError

logger = logging.getLogger(__name__)

IntMatrix = DomainMatrix
Rational = Fraction | int


def int_matrix(rows: Sequence[Sequence[int]], cols: Optional[int] = None) -> IntMatrix:
    """Builds a ZZ DomainMatrix from nested integer rows."""
    n_rows = len(rows)
    n_cols = cols if cols is not None else (len(rows[0]) if rows else 0)
    entries = [[ZZ(int(e)) for e in row] for row in rows]
    return DomainMatrix(entries, (n_rows, n_cols), ZZ)


def identity_matrix(n: int) -> IntMatrix:
    return DomainMatrix.eye(n, ZZ)


def column(values: Sequence[int]) -> IntMatrix:
    return int_matrix([[v] for v in values], cols=1)


def to_int_rows(matrix: DomainMatrix) -> list[list[int]]:
    return [[int(e) for e in row] for row in matrix.to_list()]


def to_fraction(element) -> Fraction:
    """Converts a QQ (or ZZ) domain element to a Fraction."""
    if hasattr(element, "denominator"):
        return Fraction(int(element.numerator), int(element.denominator))
    return Fraction(int(element))


def _qq(value: Rational):
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def mat_vec(rows: Sequence[Sequence[int]], vector: Sequence[Rational]) -> list:
    return [sum(a * x for a, x in zip(row, vector) if a) for row in rows]


@dataclass(frozen=True)
class SmithDecomposition:
    """U·A·V = S with S diagonal, nonzero entries positive and d1 | d2 | ..."""

    S: IntMatrix
    U: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> list[int]:
        rows = to_int_rows(self.S)
        return [rows[i][i] for i in range(min(self.S.shape))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)

    @property
    def invariant_factors(self) -> list[int]:
        """Diagonal entries greater than one."""
        return [d for d in self.diagonal if d > 1]


def _normalize_smith(
    diag: list[int], u: list[list[int]], v: list[list[int]]
) -> None:
    """Fixes signs, moves zeros last and enforces the divisibility chain in place."""
    k = len(diag)
    for i in range(k):
        if diag[i] < 0:
            diag[i] = -diag[i]
            u[i] = [-e for e in u[i]]

    order = [i for i in range(k) if diag[i] != 0] + [i for i in range(k) if diag[i] == 0]
    if order != list(range(k)):
        new_u = [u[i] for i in order] + u[k:]
        u[:] = new_u
        for row in v:
            head = [row[i] for i in order]
            row[:k] = head
        diag[:] = [diag[i] for i in order]

    r = sum(1 for d in diag if d != 0)
    for i in range(r):
        for j in range(i + 1, r):
            a, b = diag[i], diag[j]
            if b % a == 0:
                continue
            x, y, g = (int(t) for t in ZZ.gcdex(ZZ(a), ZZ(b)))
            ag, bg = a // g, b // g
            ui, uj = u[i], u[j]
            u[i] = [x * p + y * q for p, q in zip(ui, uj)]
            u[j] = [-bg * p + ag * q for p, q in zip(ui, uj)]
            for row in v:
                p, q = row[i], row[j]
                row[i] = p + q
                row[j] = -y * bg * p + x * ag * q
            diag[i], diag[j] = g, a * bg


def smith_normal_form(A: IntMatrix) -> SmithDecomposition:
    """
    Computes a Smith normal form decomposition U·A·V = S.

    Args:
        A: Integer matrix of any shape.

    Returns:
        The decomposition, post-verified by multiplying it out.
    """
    A = A.convert_to(ZZ).to_dense()
    rows, cols = A.shape
    if rows == 0 or cols == 0:
        return SmithDecomposition(S=A, U=identity_matrix(rows), V=identity_matrix(cols))

    smf, s, t = smith_normal_decomp(A)
    s_rows, u, v = to_int_rows(smf), to_int_rows(s), to_int_rows(t)
    diag = [s_rows[i][i] for i in range(min(rows, cols))]
    _normalize_smith(diag, u, v)

    S = [[0] * cols for _ in range(rows)]
    for i, d in enumerate(diag):
        S[i][i] = d
    result = SmithDecomposition(S=int_matrix(S, cols), U=int_matrix(u, rows), V=int_matrix(v, cols))
    if to_int_rows(result.U * A * result.V) != S:
        raise InvariantError("Smith decomposition does not multiply back to S")
    return result


def invariant_factors(A: IntMatrix) -> list[int]:
    """SNF diagonal (nonnegative, divisibility chain, zeros last) without transforms."""
    A = A.convert_to(ZZ).to_dense()
    if 0 in A.shape:
        return []
    diag = [abs(int(d)) for d in _invariant_factors(A)]
    diag = [d for d in diag if d != 0] + [0] * sum(1 for d in diag if d == 0)
    r = sum(1 for d in diag if d != 0)
    for i in range(r):
        for j in range(i + 1, r):
            a, b = diag[i], diag[j]
            if b % a:
                g = int(ZZ.gcdex(ZZ(a), ZZ(b))[2])
                diag[i], diag[j] = g, a * b // g
    return diag


def cokernel_order(A: IntMatrix) -> Optional[int]:
    """Order of Z^rows / A·Z^cols, or None when the cokernel is infinite."""
    factors = invariant_factors(A)
    rank = sum(1 for d in factors if d != 0)
    if rank < A.shape[0]:
        return None
    return prod(factors)


def det_exact(A: IntMatrix) -> int:
    """Exact determinant (sympy uses fraction-free Bareiss elimination over ZZ)."""
    rows, cols = A.shape
    if rows != cols:
        raise ValueError(f"Determinant of a non-square {rows}x{cols} matrix")
    if rows == 0:
        return 1
    return int(A.convert_to(ZZ).to_dense().det())


def solve_exact(A: IntMatrix, b: Sequence[Rational]) -> list[Fraction]:
    """
    Solves A·x = b over the rationals.

    Args:
        A: Square nonsingular integer matrix.
        b: Right-hand side with integer or rational entries.

    Returns:
        The unique rational solution.
    """
    n, m = A.shape
    if n != m:
        raise ValueError(f"solve_exact needs a square matrix, got {n}x{m}")
    if len(b) != n:
        raise ValueError(f"Right-hand side has length {len(b)}, expected {n}")
    rhs = DomainMatrix([[_qq(v)] for v in b], (n, 1), QQ)
    try:
        x = A.convert_to(QQ).to_dense().lu_solve(rhs)
    except (DMNonInvertibleMatrixError, ZeroDivisionError) as e:
        raise SingularMatrixError(f"Matrix is singular: {e}")
    return [to_fraction(row[0]) for row in x.to_list()]


def inverse_exact(A: IntMatrix) -> list[list[Fraction]]:
    """Exact rational inverse as nested rows."""
    n, m = A.shape
    if n != m:
        raise ValueError(f"inverse_exact needs a square matrix, got {n}x{m}")
    try:
        inverse = A.convert_to(QQ).to_dense().inv()
    except (DMNonInvertibleMatrixError, ZeroDivisionError) as e:
        raise SingularMatrixError(f"Matrix is singular: {e}")
    return [[to_fraction(e) for e in row] for row in inverse.to_list()]


def lattice_solve(A: IntMatrix, b: Sequence[int]) -> Optional[list[int]]:
    """
    Finds an integer y with A·y = b through the Smith normal form.

    Free coordinates of the SNF parameterization are set to zero, so the result is a
    deterministic function of (A, b).

    Returns:
        The solution, or None when b is not in A·Z^n.
    """
    rows, cols = A.shape
    if len(b) != rows:
        raise ValueError(f"Right-hand side has length {len(b)}, expected {rows}")
    snf = smith_normal_form(A)
    c = mat_vec(to_int_rows(snf.U), [int(v) for v in b])
    diag = snf.diagonal
    z = [0] * cols
    for i in range(rows):
        d = diag[i] if i < len(diag) else 0
        if d == 0:
            if c[i] != 0:
                return None
            continue
        if c[i] % d:
            return None
        z[i] = c[i] // d
    y = mat_vec(to_int_rows(snf.V), z)
    if mat_vec(to_int_rows(A), y) != [int(v) for v in b]:
        raise InvariantError("lattice_solve produced a non-solution")
    return y


def in_lattice(A: IntMatrix, b: Sequence[int]) -> bool:
    return lattice_solve(A, b) is not None


def unimodular_inverse(U: IntMatrix) -> list[list[int]]:
    """Inverse of a unimodular integer matrix as integer rows."""
    inverse = inverse_exact(U)
    result = []
    for row in inverse:
        if any(e.denominator != 1 for e in row):
            raise InvariantError("Matrix is not unimodular")
        result.append([int(e) for e in row])
    return result
