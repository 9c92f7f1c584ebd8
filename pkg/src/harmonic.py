"""
Harmonic functions on lattice domains and the sandpile structure they encode.

Diagonal families are built by marching the 5-point relation from a defining diagonal
outward, one diagonal at a time. Each new diagonal has one degree of freedom, fixed by a
free-value policy relative to the orthogonal main diagonal of an anchor.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import floor, gcd
from typing import Iterable, NamedTuple, Optional, Sequence

from src.config import APP_CONFIG
from src.errors import (
    BasisConstructionError,
    BoxTooSmallError,
    DivisibilityError,
    DomainShapeError,
    IndexOutOfRangeError,
    IntegralityError,
    InvariantError,
    NonConvexDomainError,
    NonHarmonicError,
    NonIntegerHarmonicError,
    SingularMatrixError,
)
from src.exact_algebra import (
    Rational,
    cokernel_order,
    det_exact,
    int_matrix,
    lattice_solve,
    smith_normal_form,
    solve_exact,
    to_int_rows,
)
from src.grid_domain import (
    NEIGHBOR_STEPS,
    Domain,
    Point,
    diamond_closure,
    is_convex_domain,
    is_convex_point_set,
    laplacian_apply,
    line_segment_points,
    line_segments,
    reduced_laplacian,
)
from src.models import Verdict
from src.sandpile_core import ChipConfig, GroupElement, SandpileGroup

logger = logging.getLogger(__name__)

Box = tuple[int, int, int, int]

FREE_VALUE_POLICIES = ("zero", "symmetric", "antisymmetric", "mirror")


class DiagonalFamily(Enum):
    """Orientation of the defining diagonal and the side on which the function vanishes."""

    PLUS_GE = "+>="  # zero where x + y is below the defining diagonal
    PLUS_LE = "+<="
    MINUS_GE = "->="  # zero where x - y is below the defining diagonal
    MINUS_LE = "-<="

    @property
    def is_plus(self) -> bool:
        return self in (DiagonalFamily.PLUS_GE, DiagonalFamily.PLUS_LE)

    @property
    def direction(self) -> int:
        return 1 if self in (DiagonalFamily.PLUS_GE, DiagonalFamily.MINUS_GE) else -1

    def level(self, p: Point) -> int:
        return p[0] + p[1] if self.is_plus else p[0] - p[1]

    def position(self, p: Point) -> int:
        return p[0] - p[1] if self.is_plus else p[0] + p[1]

    def point(self, level: int, position: int) -> Point:
        if self.is_plus:
            return ((level + position) // 2, (level - position) // 2)
        return ((position + level) // 2, (position - level) // 2)


BASIS_FAMILY_ORDER = (
    DiagonalFamily.PLUS_GE,
    DiagonalFamily.PLUS_LE,
    DiagonalFamily.MINUS_GE,
    DiagonalFamily.MINUS_LE,
)


class DiagonalAnchor(NamedTuple):
    """Main diagonals d⁺₀: x + y = c_plus and d⁻₀: x - y = c_minus."""

    c_plus: int
    c_minus: int

    @classmethod
    def for_domain(cls, domain: Domain) -> "DiagonalAnchor":
        x0, y0, x1, y1 = domain.bounding_box
        return cls((x0 + x1 + y0 + y1) // 2, (x0 + x1 - y0 - y1) // 2)

    def defining_level(self, family: DiagonalFamily, index: int) -> int:
        return (self.c_plus if family.is_plus else self.c_minus) + index

    def axis(self, family: DiagonalFamily) -> int:
        """Position of the orthogonal main diagonal in the family's frame."""
        return self.c_minus if family.is_plus else self.c_plus

    def index_of(self, family: DiagonalFamily, p: Point) -> int:
        return family.level(p) - (self.c_plus if family.is_plus else self.c_minus)


def box_points(box: Box) -> list[Point]:
    x0, y0, x1, y1 = box
    return [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]


def box_around(domain: Domain, margin: int = 1) -> Box:
    x0, y0, x1, y1 = domain.bounding_box
    return (x0 - margin, y0 - margin, x1 + margin, y1 + margin)


def _in_box(p: Point, box: Box) -> bool:
    return box[0] <= p[0] <= box[2] and box[1] <= p[1] <= box[3]


@dataclass(frozen=True)
class HarmonicFunction:
    """
    Exact rational values on a finite support: a rectangular box or a domain.

    Harmonicity is a property checked on demand; a function on a domain is harmonic when
    Δ_Γ vanishes at the interior vertices.
    """

    values: dict[Point, Rational] = field(hash=False)
    box: Optional[Box] = None

    def __getitem__(self, p: Point) -> Rational:
        return self.values[p]

    def get(self, p: Point, default: Rational = 0) -> Rational:
        return self.values.get(p, default)

    def __contains__(self, p: Point) -> bool:
        return p in self.values

    @property
    def points(self) -> list[Point]:
        return sorted(self.values)

    @property
    def bounding_box(self) -> Box:
        if self.box is not None:
            return self.box
        xs = [p[0] for p in self.values]
        ys = [p[1] for p in self.values]
        return (min(xs), min(ys), max(xs), max(ys))

    def restrict(self, domain: Domain) -> list[Rational]:
        missing = [v for v in domain.vertices if v not in self.values]
        if missing:
            raise BoxTooSmallError(f"Function is undefined at {missing[0]} and {len(missing) - 1} more")
        return [self.values[v] for v in domain.vertices]

    def restricted_to(self, domain: Domain) -> "HarmonicFunction":
        return HarmonicFunction(dict(zip(domain.vertices, self.restrict(domain))))

    def _combine(self, other: "HarmonicFunction", sign: int) -> "HarmonicFunction":
        keys = self.values.keys() & other.values.keys()
        return HarmonicFunction(
            {p: self.values[p] + sign * other.values[p] for p in keys},
            self.box if self.box == other.box else None,
        )

    def __add__(self, other: "HarmonicFunction") -> "HarmonicFunction":
        return self._combine(other, 1)

    def __sub__(self, other: "HarmonicFunction") -> "HarmonicFunction":
        return self._combine(other, -1)

    def __neg__(self) -> "HarmonicFunction":
        return self.scaled(-1)

    def scaled(self, factor: Rational) -> "HarmonicFunction":
        return HarmonicFunction({p: factor * v for p, v in self.values.items()}, self.box)

    def is_integer(self) -> bool:
        return all(Fraction(v).denominator == 1 for v in self.values.values())

    def laplacian_at(self, p: Point) -> Rational:
        """Plane Laplacian; all four neighbors must be in the support."""
        x, y = p
        return sum(self.values[(x + sx, y + sy)] for sx, sy in NEIGHBOR_STEPS) - 4 * self.values[p]

    def non_harmonic_points(self, points: Iterable[Point]) -> list[Point]:
        return [p for p in points if self.laplacian_at(p) != 0]

    def box_interior(self) -> list[Point]:
        x0, y0, x1, y1 = self.bounding_box
        return [(x, y) for x in range(x0 + 1, x1) for y in range(y0 + 1, y1)]

    def domain_laplacian(self, domain: Domain) -> list[Rational]:
        return laplacian_apply(domain, self.restrict(domain))


def _int_if_whole(v: Rational) -> Rational:
    v = Fraction(v)
    return int(v) if v.denominator == 1 else v


def _march(
    start_level: int,
    direction: int,
    seed_position: int,
    sign: int,
    axis: int,
    policy: str,
    rows: int,
    lo: int,
    hi: int,
) -> list[dict[int, Rational]]:
    """
    Row m sits at level start_level + direction·m and covers positions [lo + m, hi - m].

    Harmonicity at (L, p) links the two forward values: f(L+1, p-1) + f(L+1, p+1) =
    4 f(L, p) - f(L-1, p-1) - f(L-1, p+1).
    """
    first = {
        p: sign * (-1) ** (abs(p - seed_position) // 2)
        for p in range(lo, hi + 1)
        if (p - start_level) % 2 == 0
    }
    result = [first]
    previous: dict[int, Rational] = {}
    seed_on_axis = (start_level - axis) % 2 == 0
    for m in range(rows - 1):
        current = result[-1]
        sums = {
            p: 4 * v - previous.get(p - 1, 0) - previous.get(p + 1, 0)
            for p, v in current.items()
        }
        level = start_level + direction * (m + 1)
        n_lo, n_hi = lo + m + 1, hi - m - 1
        on_axis = (level - axis) % 2 == 0

        mode = policy
        if policy == "mirror":
            mode = "symmetric" if seed_on_axis else "antisymmetric"
        if on_axis:
            anchor, value = axis, 0
        elif mode == "symmetric":
            anchor, value = axis - 1, _int_if_whole(Fraction(sums[axis]) / 2)
        elif mode == "antisymmetric":
            anchor, value = axis + 1, 0
        else:
            anchor, value = axis - 1, 0

        row = {anchor: value}
        q = anchor
        while q + 2 <= n_hi:
            row[q + 2] = sums[q + 1] - row[q]
            q += 2
        q = anchor
        while q - 2 >= n_lo:
            row[q - 2] = sums[q - 1] - row[q]
            q -= 2
        previous = current
        result.append(row)
    return result


def diagonal_harmonic(
    family: DiagonalFamily,
    index: int,
    box: Box,
    policy: str = "zero",
    anchor: DiagonalAnchor = DiagonalAnchor(0, 0),
    seed: Optional[Point] = None,
    sign: int = 1,
) -> HarmonicFunction:
    """
    Diagonal harmonic function H^{family}_{index} evaluated on a box.

    Args:
        family: Orientation and vanishing side.
        index: Offset of the defining diagonal from the anchor's main diagonal.
        box: (x0, y0, x1, y1), inclusive.
        policy: Free-value policy; "zero" puts 0 next to the orthogonal main diagonal,
            "symmetric"/"antisymmetric" mirror the function across it, "mirror" picks one of
            the two depending on whether the diagonals cross at a vertex.
        anchor: Main diagonals d⁺₀ and d⁻₀.
        seed: Vertex of the defining diagonal holding `sign`; defaults to the vertex at or
            just below the crossing with the orthogonal main diagonal.
        sign: +1 or -1.

    Returns:
        Values on every box point; harmonic at every interior vertex of the box.
    """
    if policy not in FREE_VALUE_POLICIES:
        raise ValueError(f"Unknown free-value policy {policy}")
    x0, y0, x1, y1 = box
    if x1 < x0 or y1 < y0:
        raise BoxTooSmallError(f"Box {box} is empty")

    start = anchor.defining_level(family, index)
    axis = anchor.axis(family)
    if seed is None:
        seed_position = axis if (start - axis) % 2 == 0 else axis - 1
    else:
        if family.level(seed) != start:
            raise ValueError(f"Seed {seed} is not on the defining diagonal {family.value}{index}")
        seed_position = family.position(seed)

    corners = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
    levels = [family.level(c) for c in corners]
    positions = [family.position(c) for c in corners]
    direction = family.direction
    reach = (max(levels) - start) if direction > 0 else (start - min(levels))
    values: dict[Point, Rational] = {}
    if reach < 0:
        return HarmonicFunction({p: 0 for p in box_points(box)}, box)

    rows = reach + 1
    lo = min(min(positions), axis - 2, seed_position) - rows - 2
    hi = max(max(positions), axis + 2, seed_position) + rows + 2
    table = _march(start, direction, seed_position, sign, axis, policy, rows, lo, hi)
    for p in box_points(box):
        m = (family.level(p) - start) * direction
        values[p] = 0 if m < 0 else table[m][family.position(p)]
    return HarmonicFunction(values, box)


def dirichlet_solve(domain: Domain, x: ChipConfig | Sequence[int]) -> HarmonicFunction:
    """The rational H on Γ with Δ_Γ H = -x."""
    rhs = list(x.values) if isinstance(x, ChipConfig) else list(x)
    solution = solve_exact(reduced_laplacian(domain), [-v for v in rhs])
    return HarmonicFunction(
        {v: _int_if_whole(s) for v, s in zip(domain.vertices, solution)}
    )


class BasisStep(NamedTuple):
    vertex: Point
    family: DiagonalFamily
    index: int


@dataclass(frozen=True)
class IntegerHarmonicBasis:
    domain: Domain
    functions: tuple[HarmonicFunction, ...]
    trace: tuple[BasisStep, ...]

    def __len__(self) -> int:
        return len(self.functions)

    def value_rows(self) -> list[list[Rational]]:
        """|Γ| x k matrix of basis values."""
        columns = [f.restrict(self.domain) for f in self.functions]
        return [list(row) for row in zip(*columns)]


def _vanishing_family(current: set[Point], v: Point) -> Optional[DiagonalFamily]:
    for family in BASIS_FAMILY_ORDER:
        target = family.level(v)
        if family.direction > 0:
            ok = all(family.level(w) < target for w in current)
        else:
            ok = all(family.level(w) > target for w in current)
        if ok:
            return family
    return None


def _check_basis_function(domain: Domain, f: HarmonicFunction, label: str) -> None:
    if not f.is_integer():
        raise IntegralityError(f"Basis function {label} is not integer-valued")
    lap = f.domain_laplacian(domain)
    for i in domain.interior_indices:
        if lap[i] != 0:
            raise NonHarmonicError(
                f"Basis function {label} is not harmonic at {domain.vertices[i]}"
            )


def basis_algorithm(domain: Domain, policy: str = "zero") -> IntegerHarmonicBasis:
    """
    Integer basis of the harmonic functions on a convex domain.

    The domain is grown one vertex at a time in lexicographic order; each step keeps the
    grown set convex, adds no line-segment vertex that Γ lacks, and contributes one
    diagonal function vanishing on the set grown so far and equal to +1 at the new vertex.
    The grown set is then closed under the diamond hull inside Γ.
    """
    if not is_convex_domain(domain):
        raise NonConvexDomainError("The basis algorithm needs a convex domain")
    anchor = DiagonalAnchor.for_domain(domain)
    box = box_around(domain)
    target_segments = line_segments(domain)

    current: set[Point] = set()
    functions: list[HarmonicFunction] = []
    trace: list[BasisStep] = []
    while len(current) < len(domain):
        chosen = None
        for v in domain.vertices:
            if v in current:
                continue
            if current and not any((v[0] + sx, v[1] + sy) in current for sx, sy in NEIGHBOR_STEPS):
                continue
            candidate = current | {v}
            if not is_convex_point_set(candidate):
                continue
            if not line_segment_points(candidate) <= target_segments:
                continue
            family = _vanishing_family(current, v)
            if family is not None:
                chosen = (v, family, candidate)
                break
        if chosen is None:
            raise BasisConstructionError(
                f"No admissible vertex after {len(functions)} steps on a domain of {len(domain)} vertices"
            )
        v, family, candidate = chosen
        index = anchor.index_of(family, v)
        f = diagonal_harmonic(family, index, box, policy, anchor, seed=v).restricted_to(domain)
        _check_basis_function(domain, f, f"{family.value}{index}")
        functions.append(f)
        trace.append(BasisStep(v, family, index))
        current = set(diamond_closure(candidate)) & domain.vertex_set
        logger.debug(f"Basis step {len(trace)}: {v} via {family.value}{index}, grown to {len(current)}")

    if len(functions) != len(domain.boundary):
        raise BasisConstructionError(
            f"Basis has {len(functions)} functions, expected {len(domain.boundary)}"
        )
    return IntegerHarmonicBasis(domain, tuple(functions), tuple(trace))


def _require_square(domain: Domain) -> int:
    x0, y0, x1, y1 = domain.bounding_box
    n = x1 - x0 + 1
    if y1 - y0 + 1 != n or len(domain) != n * n:
        raise DomainShapeError("The construction needs a full square domain")
    return n


def proper_square_basis(domain: Domain) -> IntegerHarmonicBasis:
    """
    The explicit main-diagonal basis of an N×N square.

    N = 1 uses H^{+>=}_0; even N uses the four families at indices ±1..±(N-1); odd N
    replaces index ±1 by H^{+>=}_0, H^{+<=}_{-1}, H^{->=}_1 and H^{-<=}_{-1}.
    """
    n = _require_square(domain)
    anchor = DiagonalAnchor.for_domain(domain)
    box = box_around(domain)
    specs: list[tuple[DiagonalFamily, int]] = []
    if n == 1:
        specs.append((DiagonalFamily.PLUS_GE, 0))
    else:
        first = 1
        if n % 2:
            specs += [
                (DiagonalFamily.PLUS_GE, 0),
                (DiagonalFamily.PLUS_LE, -1),
                (DiagonalFamily.MINUS_GE, 1),
                (DiagonalFamily.MINUS_LE, -1),
            ]
            first = 2
        for i in range(first, n):
            specs += [
                (DiagonalFamily.PLUS_GE, i),
                (DiagonalFamily.PLUS_LE, -i),
                (DiagonalFamily.MINUS_GE, i),
                (DiagonalFamily.MINUS_LE, -i),
            ]

    functions, trace = [], []
    for family, index in specs:
        f = diagonal_harmonic(family, index, box, "zero", anchor).restricted_to(domain)
        _check_basis_function(domain, f, f"{family.value}{index}")
        level = anchor.defining_level(family, index)
        axis = anchor.axis(family)
        seed = family.point(level, axis if (level - axis) % 2 == 0 else axis - 1)
        functions.append(f)
        trace.append(BasisStep(seed, family, index))

    basis = IntegerHarmonicBasis(domain, tuple(functions), tuple(trace))
    determinant = abs(potential_matrix(basis).determinant)
    expected = abs(det_exact(reduced_laplacian(domain)))
    if determinant != expected:
        raise BasisConstructionError(
            f"Potential determinant {determinant} differs from the group order {expected}"
        )
    return basis


@dataclass(frozen=True)
class PotentialMatrix:
    """Column i is Δ_Γ B_i on the boundary vertices, in `domain.boundary` order."""

    domain: Domain
    entries: tuple[tuple[int, ...], ...]

    @property
    def matrix(self):
        return int_matrix(self.entries, len(self.entries))

    @property
    def determinant(self) -> int:
        return det_exact(self.matrix)


def potential_matrix(basis: IntegerHarmonicBasis) -> PotentialMatrix:
    domain = basis.domain
    columns = []
    for k, f in enumerate(basis.functions):
        lap = f.domain_laplacian(domain)
        if any(lap[i] != 0 for i in domain.interior_indices):
            raise NonHarmonicError(f"Basis function {k} is not harmonic inside the domain")
        column = [lap[i] for i in domain.boundary_indices]
        if any(Fraction(c).denominator != 1 for c in column):
            raise IntegralityError(f"Basis function {k} has a non-integer boundary Laplacian")
        columns.append([int(c) for c in column])
    if len(columns) != len(domain.boundary):
        raise SingularMatrixError("Basis size differs from the boundary size")
    entries = tuple(tuple(row) for row in zip(*columns))
    result = PotentialMatrix(domain, entries)
    if result.determinant == 0:
        raise SingularMatrixError("Potential matrix is singular; the basis is invalid")
    return result


def order_via_basis(domain: Domain) -> int:
    """|det| of the potential matrix; equals the sandpile group order."""
    return abs(potential_matrix(basis_algorithm(domain)).determinant)


def harmonic_basis_coordinates(h: HarmonicFunction, basis: IntegerHarmonicBasis) -> list[int]:
    """
    Integer coordinates of an integer harmonic function in the basis.

    Raises:
        IntegralityError: if the coordinates are not integers.
        NonHarmonicError: if h is not in the span of the basis.
    """
    domain = basis.domain
    boundary = domain.boundary_indices
    rows = basis.value_rows()
    values = h.restrict(domain)
    square = [[rows[i][k] for k in range(len(basis))] for i in boundary]
    if any(Fraction(e).denominator != 1 for row in square for e in row):
        raise IntegralityError("Basis values are not integers")
    coordinates = solve_exact(int_matrix(square, len(basis)), [values[i] for i in boundary])
    if any(c.denominator != 1 for c in coordinates):
        raise IntegralityError("Function has non-integer coordinates in the basis")
    rebuilt = [sum(c * e for c, e in zip(coordinates, row)) for row in rows]
    if rebuilt != [Fraction(v) for v in values]:
        raise NonHarmonicError("Function is not harmonic on the domain")
    return [int(c) for c in coordinates]


def boundary_support_rep(x: ChipConfig) -> ChipConfig:
    """
    A class representative of x supported on ∂Γ.

    Small domains solve Δ_int z = -x_int on the interior rows with lattice_solve; larger
    ones push the interior chips down row by row onto the boundary.
    """
    domain = x.domain
    interior = domain.interior_indices
    if not interior:
        return x
    if len(domain) <= APP_CONFIG.snf_max_vertices:
        lap_rows = to_int_rows(reduced_laplacian(domain))
        z = lattice_solve(
            int_matrix([lap_rows[i] for i in interior], len(domain)),
            [-x.values[i] for i in interior],
        )
        if z is None:
            raise InvariantError("Interior rows of the Laplacian do not reach the configuration")
    else:
        z = _sweep_to_boundary(domain, list(x.values))
    result = [a + b for a, b in zip(x.values, laplacian_apply(domain, z))]
    if any(result[i] != 0 for i in interior):
        raise InvariantError("Boundary representative still has interior chips")
    return ChipConfig(domain, tuple(result))


def _sweep_to_boundary(domain: Domain, values: list[int]) -> list[int]:
    index = domain.index
    neighbors = domain.neighbors
    z = [0] * len(domain)
    order = sorted(domain.interior_indices, key=lambda i: (-domain.vertices[i][1], domain.vertices[i][0]))
    for i in order:
        chips = values[i]
        if chips == 0:
            continue
        x, y = domain.vertices[i]
        w = index[(x, y - 1)]
        # Firing w backwards adds -chips at v and its other neighbors lie below v's row.
        t = -chips
        z[w] += t
        values[w] -= 4 * t
        for u in neighbors[w]:
            values[u] += t
    return z


@dataclass(frozen=True)
class TorusCoordinates:
    """A point of (Q/Z)^{∂Γ}, components reduced into [0, 1)."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) % 1 for v in self.values))

    def __add__(self, other: "TorusCoordinates") -> "TorusCoordinates":
        return TorusCoordinates(tuple(a + b for a, b in zip(self.values, other.values)))

    def __neg__(self) -> "TorusCoordinates":
        return TorusCoordinates(tuple(-a for a in self.values))

    def scale(self, factor: Rational) -> "TorusCoordinates":
        return TorusCoordinates(tuple(factor * a for a in self.values))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.values)

    @classmethod
    def zero(cls, size: int) -> "TorusCoordinates":
        return cls((Fraction(0),) * size)


def sigma(x: ChipConfig, basis: IntegerHarmonicBasis) -> TorusCoordinates:
    """σ(x) = -P⁻¹·x'|∂Γ mod 1 for a boundary-supported representative x'."""
    domain = basis.domain
    rep = boundary_support_rep(x)
    boundary_values = [rep.values[i] for i in domain.boundary_indices]
    p = potential_matrix(basis)
    solution = solve_exact(p.matrix, boundary_values)
    return TorusCoordinates(tuple(-s for s in solution))


def phi(s: TorusCoordinates, basis: IntegerHarmonicBasis) -> HarmonicFunction:
    """Σ s_i B_i, a representative of its class in H_Q / H_Z."""
    domain = basis.domain
    total = [Fraction(0)] * len(domain)
    for coefficient, f in zip(s.values, basis.functions):
        if coefficient:
            for i, v in enumerate(f.restrict(domain)):
                total[i] += coefficient * v
    return HarmonicFunction({v: _int_if_whole(t) for v, t in zip(domain.vertices, total)})


def _group_for(domain: Domain, group: Optional[SandpileGroup]) -> SandpileGroup:
    return group if group is not None else SandpileGroup(domain)


def floor_map(
    s: TorusCoordinates, basis: IntegerHarmonicBasis, group: Optional[SandpileGroup] = None
) -> GroupElement:
    """f(s) = -[⌊Σ s_i Δ_Γ B_i⌋]."""
    domain = basis.domain
    lap = phi(s, basis).domain_laplacian(domain)
    floored = ChipConfig(domain, tuple(-floor(Fraction(v)) for v in lap))
    return _group_for(domain, group).canonical_rep(floored)


def _require_integer_harmonic(h: HarmonicFunction, domain: Domain) -> list[int]:
    values = h.restrict(domain)
    if any(Fraction(v).denominator != 1 for v in values):
        raise NonIntegerHarmonicError("Harmonic dynamics needs an integer-valued function")
    lap = laplacian_apply(domain, values)
    if any(lap[i] != 0 for i in domain.interior_indices):
        raise NonHarmonicError("Function is not harmonic inside the domain")
    return [int(v) for v in values]


def harmonic_dynamics(
    h: HarmonicFunction,
    t: Rational,
    domain: Domain,
    group: Optional[SandpileGroup] = None,
) -> GroupElement:
    """D(t) = [⌊t·Δ_Γ Ĥ⌋]; periodic in t with period 1."""
    values = _require_integer_harmonic(h, domain)
    t = Fraction(t)
    lap = laplacian_apply(domain, values)
    config = ChipConfig(domain, tuple(floor(t * v) for v in lap))
    return _group_for(domain, group).canonical_rep(config)


def dynamics_orbit(
    h: HarmonicFunction, n: int, domain: Domain, group: Optional[SandpileGroup] = None
) -> list[GroupElement]:
    """D(k/n) for k = 0..n-1."""
    group = _group_for(domain, group)
    return [harmonic_dynamics(h, Fraction(k, n), domain, group) for k in range(n)]


def cyclic_subgroup_from_harmonic(
    h: HarmonicFunction,
    domain: Domain,
    n: int,
    group: Optional[SandpileGroup] = None,
) -> tuple[GroupElement, int]:
    """
    Generator C = [-(1/n)·Δ_Γ(H|Γ)] of a cyclic subgroup and its order.

    H must be harmonic on Γ as a plane function and divisible by n on the outer ring.
    When the values of H on Γ are coprime the order is asserted to be exactly n.
    """
    if n < 1:
        raise ValueError(f"Subgroup order must be positive, got {n}")
    ring = domain.outer_ring
    missing = [p for p in list(domain.vertices) + list(ring) if p not in h]
    if missing:
        raise BoxTooSmallError(f"Function is undefined at {missing[0]}")
    bad = h.non_harmonic_points(domain.vertices)
    if bad:
        raise NonHarmonicError(f"Function is not harmonic at {bad[0]}")
    values = h.restrict(domain)
    if any(Fraction(v).denominator != 1 for v in values + [h[p] for p in ring]):
        raise NonIntegerHarmonicError("Function must be integer-valued on Γ and its outer ring")
    not_divisible = [p for p in ring if int(h[p]) % n]
    if not_divisible:
        raise DivisibilityError(f"H{not_divisible[0]} = {h[not_divisible[0]]} is not divisible by {n}")

    coprime = gcd(*(int(v) for v in values)) == 1
    if not coprime:
        logger.warning("Values of H on the domain are not coprime; the subgroup may be smaller")
    lap = laplacian_apply(domain, [int(v) for v in values])
    generator_config = ChipConfig(domain, tuple(-(v // n) for v in lap))
    group = _group_for(domain, group)
    generator = group.canonical_rep(generator_config)
    order = group.element_order(generator, multiple=n)
    if coprime and order != n:
        raise InvariantError(f"Generator has order {order}, expected {n}")
    logger.info(f"Cyclic subgroup of order {order} on a domain of {len(domain)} vertices")
    return generator, order


def subgroup_elements(generator: GroupElement, group: Optional[SandpileGroup] = None) -> list[GroupElement]:
    """0, g, 2g, ... up to the order of g."""
    group = _group_for(generator.domain, group)
    elements = [group.identity()]
    current = generator
    while current != elements[0]:
        elements.append(current)
        current = group.add(current, generator)
    return elements


def _square_center(domain: Domain) -> tuple[int, int, int]:
    n = _require_square(domain)
    x0, y0, _, _ = domain.bounding_box
    return n, x0, y0


def h_xy(domain: Domain) -> HarmonicFunction:
    """H = x·y with coordinates centered on an odd square, on the square and its outer ring."""
    n, x0, y0 = _square_center(domain)
    if n % 2 == 0:
        raise DomainShapeError(f"H = xy needs an odd square, got side {n}")
    cx, cy = x0 + (n - 1) // 2, y0 + (n - 1) // 2
    box = box_around(domain)
    return HarmonicFunction({(x, y): (x - cx) * (y - cy) for x, y in box_points(box)}, box)


def h_pi(domain: Domain, box: Optional[Box] = None) -> HarmonicFunction:
    """
    H^π = Σ_i (-1)^i (H^{+>=}_{2i+1} + H^{+<=}_{-(2i+1)} - H^{->=}_{2i+1} - H^{-<=}_{-(2i+1)}).

    The main diagonals of an even square cross at a square center, so every odd-indexed
    defining diagonal meets the orthogonal one at a vertex and all terms are symmetric.
    Terms whose defining diagonal misses the box vanish on it.
    """
    n, _, _ = _square_center(domain)
    if n % 2:
        raise DomainShapeError(f"H^π needs an even square, got side {n}")
    box = box or box_around(domain)
    if not all(_in_box(p, box) for p in list(domain.vertices) + list(domain.outer_ring)):
        raise BoxTooSmallError(f"Box {box} does not cover the domain and its outer ring")
    anchor = DiagonalAnchor.for_domain(domain)
    corners = [(box[0], box[1]), (box[0], box[3]), (box[2], box[1]), (box[2], box[3])]

    total = HarmonicFunction({p: 0 for p in box_points(box)}, box)
    terms = 0
    for family, sign in (
        (DiagonalFamily.PLUS_GE, 1),
        (DiagonalFamily.PLUS_LE, 1),
        (DiagonalFamily.MINUS_GE, -1),
        (DiagonalFamily.MINUS_LE, -1),
    ):
        levels = [family.level(c) for c in corners]
        i = 0
        while True:
            index = (2 * i + 1) * family.direction
            start = anchor.defining_level(family, index)
            if not min(levels) <= start <= max(levels):
                break
            term = diagonal_harmonic(family, index, box, "symmetric", anchor)
            total = total + term.scaled(sign * (-1) ** i)
            terms += 1
            i += 1
    logger.debug(f"H^π on side {n} summed {terms} diagonal terms")
    return total


def h_diamond(domain: Domain, i: int) -> HarmonicFunction:
    """
    H^⋄_i: four zero-policy diagonal functions whose defining diagonals bound a diamond
    with corners on the outer ring; signs cancel the ±1 values at the corners.
    """
    n, x0, y0 = _square_center(domain)
    if not 1 <= i <= n:
        raise IndexOutOfRangeError(f"Diamond index must be in 1..{n}, got {i}")
    anchor = DiagonalAnchor.for_domain(domain)
    box = box_around(domain)
    edges = [
        diagonal_harmonic(DiagonalFamily.PLUS_GE, i, box, "zero", anchor),
        diagonal_harmonic(DiagonalFamily.MINUS_LE, -n + i - 1, box, "zero", anchor),
        diagonal_harmonic(DiagonalFamily.PLUS_LE, -i, box, "zero", anchor),
        diagonal_harmonic(DiagonalFamily.MINUS_GE, n - i + 1, box, "zero", anchor),
    ]
    right = (x0 + n, y0 + i - 1)
    top = (x0 + i - 1, y0 + n)
    left = (x0 - 1, y0 + n - i)
    bottom = (x0 + n - i, y0 - 1)

    # Each corner is shared by two consecutive edges; fix signs around the diamond.
    signs = [1, 0, 0, 0]
    signs[1] = -signs[0] * edges[0][top] * edges[1][top]
    signs[2] = -signs[1] * edges[1][left] * edges[2][left]
    signs[3] = -signs[0] * edges[0][right] * edges[3][right]
    if signs[2] * edges[2][bottom] + signs[3] * edges[3][bottom] != 0:
        raise InvariantError(f"Diamond {i} signs do not cancel at the bottom corner")

    total = edges[0]
    for s, f in zip(signs[1:], edges[1:]):
        total = total + f.scaled(s)
    if any(int(v) % 4 for v in total.domain_laplacian(domain)):
        raise DivisibilityError(f"Laplacian of diamond {i} is not divisible by four")
    return total


def degenerate_diamond(domain: Domain) -> HarmonicFunction:
    """H^{+>=}_0 on an odd square; its Laplacian on Γ is divisible by four."""
    n, _, _ = _square_center(domain)
    if n % 2 == 0:
        raise DomainShapeError(f"The degenerate diamond needs an odd square, got side {n}")
    return diagonal_harmonic(
        DiagonalFamily.PLUS_GE, 0, box_around(domain), "zero", DiagonalAnchor.for_domain(domain)
    )


def div4_generators(domain: Domain) -> list[tuple[str, HarmonicFunction]]:
    n, _, _ = _square_center(domain)
    if n % 2 == 0:
        return [(f"diamond:{i}", h_diamond(domain, i)) for i in range(1, n + 1)]
    return [("degenerate", degenerate_diamond(domain))] + [
        (f"diamond:{i}", h_diamond(domain, i)) for i in range(2, n + 1)
    ]


def verify_div4_subgroup(domain: Domain) -> Verdict:
    """The classes of -(1/4)·Δ_Γ(H|Γ) over the diamond generators span a subgroup of order 4^N."""
    n, _, _ = _square_center(domain)
    columns = []
    for label, h in div4_generators(domain):
        lap = h.domain_laplacian(domain)
        if any(int(v) % 4 for v in lap):
            return Verdict(holds=False, detail=f"Laplacian of {label} is not divisible by four")
        columns.append([-(int(v) // 4) for v in lap])

    lap_rows = to_int_rows(reduced_laplacian(domain))
    stacked = [row + [c[k] for c in columns] for k, row in enumerate(lap_rows)]
    quotient = cokernel_order(int_matrix(stacked, len(domain) + len(columns)))
    group_size = abs(det_exact(reduced_laplacian(domain)))
    subgroup = group_size // quotient
    expected = 4**n
    logger.info(f"Diamond subgroup on side {n} has order {subgroup} (expected {expected})")
    if subgroup != expected:
        return Verdict(holds=False, detail=f"Subgroup order {subgroup}, expected {expected}")
    return Verdict(holds=True, detail=f"Subgroup order {subgroup}")


def extend_to_diamond_hull(h: HarmonicFunction, domain: Domain) -> HarmonicFunction:
    """The unique harmonic extension of H from Γ to diam(Γ)."""
    if not is_convex_domain(domain):
        raise NonConvexDomainError("The diamond hull is only defined for convex domains")
    values = dict(zip(domain.vertices, h.restrict(domain)))
    while True:
        forced: dict[Point, Rational] = {}
        for (x, y), value in values.items():
            around = [(x + sx, y + sy) for sx, sy in NEIGHBOR_STEPS]
            outside = [w for w in around if w not in values]
            if len(outside) != 1:
                continue
            w = outside[0]
            v = 4 * value - sum(values[u] for u in around if u != w)
            if w in forced and forced[w] != v:
                raise InvariantError(f"Harmonic extension is inconsistent at {w}")
            forced[w] = v
        if not forced:
            return HarmonicFunction(values)
        values.update(forced)


def torus_kernel(basis: IntegerHarmonicBasis) -> list[TorusCoordinates]:
    """
    All s in (Q/Z)^{∂Γ} with P·s integral, i.e. P⁻¹Z^k / Z^k, enumerated through the SNF
    U·P·V = S as s = V·S⁻¹·w for 0 <= w_i < d_i.
    """
    p = potential_matrix(basis)
    snf = smith_normal_form(p.matrix)
    diagonal = snf.diagonal
    v_rows = to_int_rows(snf.V)
    k = len(diagonal)
    elements = [[0] * k]
    for i, d in enumerate(diagonal):
        elements = [w[:i] + [j] + w[i + 1 :] for w in elements for j in range(d)]
    result = []
    for w in elements:
        scaled = [Fraction(w[i], diagonal[i]) for i in range(k)]
        result.append(
            TorusCoordinates(tuple(sum(v_rows[r][c] * scaled[c] for c in range(k)) for r in range(k)))
        )
    return result


def verify_exact_sequence(basis: IntegerHarmonicBasis, elements: Sequence[GroupElement]) -> Verdict:
    """The torus points with integral boundary Laplacian are exactly σ of the group."""
    images = {sigma(e.rep, basis) for e in elements}
    kernel = set(torus_kernel(basis))
    if images != kernel:
        return Verdict(
            holds=False,
            detail=f"{len(images)} images of σ against {len(kernel)} kernel points",
        )
    return Verdict(holds=True, detail=f"{len(kernel)} points")


def hplus_values(x_max: int) -> dict[Point, Rational]:
    """
    H⁺ = Σ_i (-1)^i H^{+>=}_{2i+1} in wedge coordinates (x, y) = (2X - 1, 2Y - 1).

    The anchor puts d⁺₀ on X + Y = 1 and d⁻₀ on X = Y, so the diagonals cross at (1/2, 1/2).
    Values cover odd x in [-1, x_max] and odd y in [-x_max - 2, x_max + 2].
    """
    anchor = DiagonalAnchor(1, 0)
    reach = (x_max + 3) // 2
    box = (-1, -reach - 1, reach + 1, reach + 2)
    top_level = box[2] + box[3]
    total: dict[Point, Rational] = {p: 0 for p in box_points(box)}
    i = 0
    while anchor.defining_level(DiagonalFamily.PLUS_GE, 2 * i + 1) <= top_level:
        term = diagonal_harmonic(DiagonalFamily.PLUS_GE, 2 * i + 1, box, "symmetric", anchor)
        for p, v in term.values.items():
            total[p] += (-1) ** i * v
        i += 1
    return {(2 * x - 1, 2 * y - 1): v for (x, y), v in total.items()}


def verify_hplus_identity(x_max: int) -> Verdict:
    """
    Checks (x - y)·H⁺(x, y) = -(x + y)·H⁺(x, -y), the vanishing of

        ε(x, y) = 4y/(x+y)·H⁺(x, y) + (x-y+2)/(x+y-2)·H⁺(x, y-2) - H⁺(x, y+2) - 2y/(x+y-2)·H⁺(x-2, y)

    and the edge values of H⁺ for odd x <= x_max and odd |y| <= x.
    """
    if x_max < 3 or x_max % 2 == 0:
        raise ValueError(f"x_max must be odd and at least 3, got {x_max}")
    H = hplus_values(x_max)
    for x in range(1, x_max + 1, 2):
        for y in range(-x, x + 1, 2):
            if (x - y) * H[(x, y)] != -(x + y) * H[(x, -y)]:
                return Verdict(holds=False, detail=f"Reflection identity fails at ({x}, {y})")
            if x < 3 or x + y == 0 or x + y == 2:
                continue
            eps = (
                Fraction(4 * y, x + y) * H[(x, y)]
                + Fraction(x - y + 2, x + y - 2) * H[(x, y - 2)]
                - H[(x, y + 2)]
                - Fraction(2 * y, x + y - 2) * H[(x - 2, y)]
            )
            if eps != 0:
                return Verdict(holds=False, detail=f"ε({x}, {y}) = {eps}")

        top = H[(x, x)]
        if top not in (1, -1) or H[(x, -x)] != 0:
            return Verdict(holds=False, detail=f"Diagonal edge values fail at x = {x}")
        if x >= 3:
            expected = {
                (x, x - 2): -top * (x - 1),
                (x, -x + 2): top,
                (x, x - 4): top * (x - 2) ** 2,
                (x, -x + 4): -top * (2 * x - 4),
            }
            for p, value in expected.items():
                if H[p] != value:
                    return Verdict(holds=False, detail=f"H⁺{p} = {H[p]}, expected {value}")
    return Verdict(holds=True, detail=f"Checked odd x up to {x_max}")
