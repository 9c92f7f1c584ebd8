"""
Geometry of the triangle tiling M, M-polyforms and their lattice domains.

M cuts every unit square along both diagonals into four isosceles triangles. Points
of the tiling are handled in doubled coordinates (a lattice point (x, y) becomes
(2x, 2y), a square center becomes an odd pair) so everything stays integral.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix

from src.errors import (
    DisconnectedDomainError,
    EmptyDomainError,
    InvalidPolyformError,
    NonConvexDomainError,
    NotAnAutomorphismError,
    PolyformTopologyError,
)
from src.exact_algebra import IntMatrix

logger = logging.getLogger(__name__)

Point = tuple[int, int]

NEIGHBOR_STEPS: tuple[Point, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


def cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


class Side(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3

    @property
    def vector(self) -> Point:
        return SIDE_VECTORS[self]

    @classmethod
    def from_vector(cls, vector: Point) -> "Side":
        return VECTOR_SIDES[vector]


SIDE_VECTORS = {Side.N: (0, 1), Side.E: (1, 0), Side.S: (0, -1), Side.W: (-1, 0)}
VECTOR_SIDES = {v: s for s, v in SIDE_VECTORS.items()}


class TriangleId(NamedTuple):
    """Triangle of square [x, x+1]×[y, y+1] with base on `side` and apex at its center."""

    square_x: int
    square_y: int
    side: Side

    @property
    def center2(self) -> Point:
        return (2 * self.square_x + 1, 2 * self.square_y + 1)

    def corners2(self) -> tuple[Point, Point, Point]:
        """Apex and both base corners in doubled coordinates, counterclockwise."""
        cx, cy = self.center2
        dx, dy = SIDE_VECTORS[self.side]
        px, py = -dy, dx
        return (
            (cx, cy),
            (cx + dx - px, cy + dy - py),
            (cx + dx + px, cy + dy + py),
        )

    def sides2(self) -> tuple[tuple[Point, Point], ...]:
        a, b, c = self.corners2()
        return ((a, b), (b, c), (c, a))

    def neighbors(self) -> tuple["TriangleId", "TriangleId", "TriangleId"]:
        """The three triangles sharing a full side with this one."""
        dx, dy = SIDE_VECTORS[self.side]
        return (
            TriangleId(self.square_x, self.square_y, Side((self.side + 1) % 4)),
            TriangleId(self.square_x, self.square_y, Side((self.side + 3) % 4)),
            TriangleId(self.square_x + dx, self.square_y + dy, Side((self.side + 2) % 4)),
        )

    @classmethod
    def from_center(cls, center2: Point, direction: Point) -> "TriangleId":
        return cls((center2[0] - 1) // 2, (center2[1] - 1) // 2, VECTOR_SIDES[direction])


# The 8 linear parts, indexed by (quarter turns, reflect); reflection is y -> -y first.
def _linear(rot: int, reflect: bool) -> tuple[int, int, int, int]:
    a, b, c, d = (1, 0, 0, -1) if reflect else (1, 0, 0, 1)
    for _ in range(rot % 4):
        a, b, c, d = -c, -d, a, b
    return a, b, c, d


LINEAR_PARTS = {(r, f): _linear(r, f) for r in range(4) for f in (False, True)}
LINEAR_LOOKUP = {m: key for key, m in LINEAR_PARTS.items()}


@dataclass(frozen=True)
class LatticeIsometry:
    """p -> R^rot(F^reflect(p)) + (dx, dy) with F the reflection y -> -y."""

    rot: int = 0
    reflect: bool = False
    dx: int = 0
    dy: int = 0

    def __post_init__(self):
        if self.rot not in range(4):
            raise NotAnAutomorphismError(f"Rotation must be 0..3 quarter turns, got {self.rot}")
        if not isinstance(self.dx, int) or not isinstance(self.dy, int):
            raise NotAnAutomorphismError(
                f"Translation ({self.dx}, {self.dy}) does not map M onto itself"
            )

    @property
    def matrix(self) -> tuple[int, int, int, int]:
        return LINEAR_PARTS[(self.rot, self.reflect)]

    @property
    def sign(self) -> int:
        return -1 if self.reflect else 1

    def linear(self, p: Point) -> Point:
        a, b, c, d = self.matrix
        return (a * p[0] + b * p[1], c * p[0] + d * p[1])

    def apply_point(self, p: Point) -> Point:
        x, y = self.linear(p)
        return (x + self.dx, y + self.dy)

    def apply_point2(self, p2: Point) -> Point:
        x, y = self.linear(p2)
        return (x + 2 * self.dx, y + 2 * self.dy)

    def apply_triangle(self, t: TriangleId) -> TriangleId:
        return TriangleId.from_center(
            self.apply_point2(t.center2), self.linear(SIDE_VECTORS[t.side])
        )

    def compose(self, other: "LatticeIsometry") -> "LatticeIsometry":
        """self ∘ other."""
        a, b, c, d = self.matrix
        e, f, g, h = other.matrix
        product = (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
        rot, reflect = LINEAR_LOOKUP[product]
        tx, ty = self.linear((other.dx, other.dy))
        return LatticeIsometry(rot, reflect, tx + self.dx, ty + self.dy)

    def inverse(self) -> "LatticeIsometry":
        a, b, c, d = self.matrix
        inv = (a, c, b, d)  # orthogonal
        rot, reflect = LINEAR_LOOKUP[inv]
        g = LatticeIsometry(rot, reflect, 0, 0)
        tx, ty = g.linear((self.dx, self.dy))
        return LatticeIsometry(rot, reflect, -tx, -ty)

    def is_identity(self) -> bool:
        return self == IDENTITY

    @classmethod
    def rotation_about(cls, center2: Point, quarter_turns: int) -> "LatticeIsometry":
        """Rotation about a point given in doubled coordinates."""
        g = cls(quarter_turns % 4, False, 0, 0)
        rx, ry = g.linear(center2)
        tx2, ty2 = center2[0] - rx, center2[1] - ry
        if tx2 % 2 or ty2 % 2:
            raise NotAnAutomorphismError(f"Rotation about {center2} is not an automorphism of M")
        return cls(quarter_turns % 4, False, tx2 // 2, ty2 // 2)

    @classmethod
    def reflection_across(cls, kind: str, c: int) -> "LatticeIsometry":
        """Reflection across one of the lines x=c, y=c, x-y=c, x+y=c of M."""
        if kind == "x":
            return cls(2, True, 2 * c, 0)
        if kind == "y":
            return cls(0, True, 0, 2 * c)
        if kind == "x-y":
            return cls(1, True, c, -c)
        if kind == "x+y":
            return cls(3, True, c, c)
        raise ValueError(f"Unknown mirror line kind: {kind}")


IDENTITY = LatticeIsometry()


def _edge_connected(triangles: frozenset[TriangleId]) -> bool:
    start = min(triangles)
    seen = {start}
    queue = deque([start])
    while queue:
        t = queue.popleft()
        for n in t.neighbors():
            if n in triangles and n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == len(triangles)


@dataclass(frozen=True)
class MPolyform:
    triangles: frozenset[TriangleId]

    def __post_init__(self):
        triangles = frozenset(TriangleId(t[0], t[1], Side(t[2])) for t in self.triangles)
        if not triangles:
            raise InvalidPolyformError("A polyform needs at least one triangle")
        if not _edge_connected(triangles):
            raise InvalidPolyformError("Polyform triangles are not edge-connected")
        object.__setattr__(self, "triangles", triangles)

    def __len__(self) -> int:
        return len(self.triangles)

    def __contains__(self, t: TriangleId) -> bool:
        return t in self.triangles

    def sorted_triangles(self) -> list[TriangleId]:
        return sorted(self.triangles)

    @cached_property
    def boundary_sides2(self) -> tuple[tuple[Point, Point], ...]:
        """Counterclockwise oriented triangle sides lying on the region boundary."""
        sides = {s for t in self.triangles for s in t.sides2()}
        return tuple(sorted(s for s in sides if (s[1], s[0]) not in sides))


def boundary_polygon(P: MPolyform) -> list[Point]:
    """
    Corner points of the boundary polygon in doubled coordinates.

    Traversal is counterclockwise, starting at the lexicographically smallest boundary
    point; collinear runs of triangle sides are merged into maximal segments.
    """
    sides = P.boundary_sides2
    outgoing: dict[Point, Point] = {}
    for a, b in sides:
        if a in outgoing:
            raise PolyformTopologyError(f"Boundary pinches at doubled point {a}")
        outgoing[a] = b

    start = min(outgoing)
    path = [start]
    current = outgoing[start]
    while current != start:
        path.append(current)
        current = outgoing[current]
        if len(path) > len(sides):
            raise PolyformTopologyError("Boundary walk does not close")
    if len(path) != len(sides):
        raise PolyformTopologyError("Polyform has holes (boundary has several cycles)")

    n = len(path)
    corners = [
        p
        for i, p in enumerate(path)
        if cross(path[i - 1], p, path[(i + 1) % n]) != 0
    ]
    k = corners.index(min(corners))
    return corners[k:] + corners[:k]


def is_convex(P: MPolyform) -> bool:
    """True iff the open region of P is convex."""
    try:
        corners = boundary_polygon(P)
    except PolyformTopologyError:
        return False
    n = len(corners)
    return all(cross(corners[i - 1], corners[i], corners[(i + 1) % n]) > 0 for i in range(n))


def apply_isometry(g: LatticeIsometry, P: MPolyform) -> MPolyform:
    return MPolyform(frozenset(g.apply_triangle(t) for t in P.triangles))


def union_polyforms(*polyforms: MPolyform) -> MPolyform:
    return MPolyform(frozenset().union(*(p.triangles for p in polyforms)))


@dataclass(frozen=True)
class Domain:
    """Finite 4-connected vertex set of Z^2; the rest of the plane is the sink."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        vertices = tuple(sorted({(int(x), int(y)) for x, y in self.vertices}))
        if not vertices:
            raise EmptyDomainError("Domain has no vertices")
        object.__setattr__(self, "vertices", vertices)
        if not _four_connected(vertices):
            raise DisconnectedDomainError("Domain is not 4-connected")

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.vertices)

    def __contains__(self, p) -> bool:
        return p in self.vertex_set

    @cached_property
    def vertex_set(self) -> frozenset[Point]:
        return frozenset(self.vertices)

    @cached_property
    def index(self) -> dict[Point, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Indices of the in-domain neighbors of every vertex."""
        index = self.index
        result = []
        for x, y in self.vertices:
            result.append(
                tuple(
                    index[(x + sx, y + sy)]
                    for sx, sy in NEIGHBOR_STEPS
                    if (x + sx, y + sy) in index
                )
            )
        return tuple(result)

    @cached_property
    def sink_edges(self) -> tuple[int, ...]:
        return tuple(4 - len(n) for n in self.neighbors)

    @cached_property
    def boundary(self) -> tuple[Point, ...]:
        return tuple(v for v, s in zip(self.vertices, self.sink_edges) if s > 0)

    @cached_property
    def interior(self) -> tuple[Point, ...]:
        return tuple(v for v, s in zip(self.vertices, self.sink_edges) if s == 0)

    @cached_property
    def boundary_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.sink_edges) if s > 0)

    @cached_property
    def interior_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.sink_edges) if s == 0)

    @cached_property
    def bounding_box(self) -> tuple[int, int, int, int]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    @cached_property
    def outer_ring(self) -> tuple[Point, ...]:
        """Vertices outside the domain adjacent to it, i.e. the boundary of the complement."""
        ring = {
            (x + sx, y + sy)
            for x, y in self.vertices
            for sx, sy in NEIGHBOR_STEPS
            if (x + sx, y + sy) not in self.vertex_set
        }
        return tuple(sorted(ring))


def _four_connected(vertices: Sequence[Point]) -> bool:
    vertex_set = set(vertices)
    seen = {vertices[0]}
    queue = deque([vertices[0]])
    while queue:
        x, y = queue.popleft()
        for sx, sy in NEIGHBOR_STEPS:
            w = (x + sx, y + sy)
            if w in vertex_set and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(vertex_set)


def domain_from_points(points: Iterable[Point]) -> Domain:
    return Domain(tuple(points))


def square_domain(n: int, origin: Point = (0, 0)) -> Domain:
    ox, oy = origin
    return Domain(tuple((ox + i, oy + j) for i in range(n) for j in range(n)))


def rectangle_domain(width: int, height: int, origin: Point = (0, 0)) -> Domain:
    ox, oy = origin
    return Domain(tuple((ox + i, oy + j) for i in range(width) for j in range(height)))


def centered_square_domain(n: int) -> Domain:
    """N×N square domain centered at the origin (N odd)."""
    if n % 2 == 0:
        raise ValueError(f"A centered square domain needs odd N, got {n}")
    h = (n - 1) // 2
    return square_domain(n, (-h, -h))


# Lattice point (x, y) is interior to a polyform iff these 8 triangles are present.
_INCIDENT = (
    (0, 0, Side.S),
    (0, 0, Side.W),
    (-1, 0, Side.S),
    (-1, 0, Side.E),
    (-1, -1, Side.N),
    (-1, -1, Side.E),
    (0, -1, Side.N),
    (0, -1, Side.W),
)


def domain_of(P: MPolyform) -> Domain:
    """
    Lattice points of the open region of P.

    Raises:
        EmptyDomainError: if no lattice point lies in the open region.
    """
    candidates = set()
    for t in P.triangles:
        for cx, cy in t.corners2():
            if cx % 2 == 0 and cy % 2 == 0:
                candidates.add((cx // 2, cy // 2))
    points = [
        (x, y)
        for x, y in candidates
        if all(TriangleId(x + sx, y + sy, side) in P.triangles for sx, sy, side in _INCIDENT)
    ]
    if not points:
        raise EmptyDomainError("No lattice point lies inside the polyform")
    return Domain(tuple(points))


def reduced_laplacian(domain: Domain) -> IntMatrix:
    """Adjacency minus degree: -4 on the diagonal, 1 between grid neighbors."""
    n = len(domain)
    rows: dict[int, dict[int, int]] = {}
    for i, nbrs in enumerate(domain.neighbors):
        row = {i: ZZ(-4)}
        for j in nbrs:
            row[j] = ZZ(1)
        rows[i] = row
    return DomainMatrix(rows, (n, n), ZZ).to_dense()


def laplacian_apply(domain: Domain, values: Sequence) -> list:
    """Δ_Γ applied to a vector indexed like domain.vertices (ints or Fractions)."""
    return [
        -4 * values[i] + sum(values[j] for j in nbrs)
        for i, nbrs in enumerate(domain.neighbors)
    ]


def convex_hull(points: Iterable[Point]) -> list[Point]:
    """Andrew's monotone chain; counterclockwise, collinear points dropped."""
    points = sorted(set(points))
    if len(points) <= 1:
        return points
    lower: list[Point] = []
    for p in points:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(points):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _in_closed_hull(p: Point, hull: list[Point]) -> bool:
    if len(hull) == 1:
        return p == hull[0]
    if len(hull) == 2:
        a, b = hull
        return (
            cross(a, b, p) == 0
            and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
        )
    n = len(hull)
    return all(cross(hull[i], hull[(i + 1) % n], p) >= 0 for i in range(n))


def is_convex_point_set(points: Iterable[Point]) -> bool:
    point_set = set(points)
    if not point_set:
        return True
    hull = convex_hull(point_set)
    xs = [p[0] for p in point_set]
    ys = [p[1] for p in point_set]
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            if (x, y) not in point_set and _in_closed_hull((x, y), hull):
                return False
    return True


def is_convex_domain(domain: Domain) -> bool:
    """True iff Γ = hull(Γ) ∩ Z^2 for the closed convex hull."""
    return is_convex_point_set(domain.vertices)


def diamond_closure(points: Iterable[Point]) -> frozenset[Point]:
    """Fixed point of ext: add the missing neighbor of every vertex with 3 inside."""
    current = set(points)
    while True:
        additions = set()
        for x, y in current:
            outside = [
                (x + sx, y + sy)
                for sx, sy in NEIGHBOR_STEPS
                if (x + sx, y + sy) not in current
            ]
            if len(outside) == 1:
                additions.add(outside[0])
        if not additions:
            return frozenset(current)
        current |= additions


def diamond_hull(domain: Domain) -> Domain:
    if not is_convex_domain(domain):
        raise NonConvexDomainError("The diamond hull is only defined for convex domains")
    return Domain(tuple(diamond_closure(domain.vertices)))


def line_segment_points(points: Iterable[Point]) -> frozenset[Point]:
    point_set = set(points)
    result = set()
    for x, y in point_set:
        inside = [(sx, sy) for sx, sy in NEIGHBOR_STEPS if (x + sx, y + sy) in point_set]
        if len(inside) == 2 and inside[0][0] == -inside[1][0] and inside[0][1] == -inside[1][1]:
            result.add((x, y))
    return frozenset(result)


def line_segments(domain: Domain) -> frozenset[Point]:
    """Vertices with exactly two collinear neighbors in Γ."""
    return line_segment_points(domain.vertices)


def polyform_from_polygon(corners: Sequence[Point]) -> MPolyform:
    """All triangles inside a convex lattice polygon given counterclockwise."""
    corners2 = [(2 * x, 2 * y) for x, y in corners]
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    n = len(corners2)
    triangles = []
    for sx in range(min(xs), max(xs)):
        for sy in range(min(ys), max(ys)):
            for side in Side:
                t = TriangleId(sx, sy, side)
                if all(
                    cross(corners2[i], corners2[(i + 1) % n], p) >= 0
                    for p in t.corners2()
                    for i in range(n)
                ):
                    triangles.append(t)
    if not triangles:
        raise InvalidPolyformError(f"Polygon {list(corners)} contains no triangle")
    return MPolyform(frozenset(triangles))


def _check_size(name: str, *values: int) -> None:
    if any(v < 1 for v in values):
        raise InvalidPolyformError(f"{name} sizes must be positive, got {values}")


def square_polyform(w: int, origin: Point = (0, 0)) -> MPolyform:
    """The w×w square [ox, ox+w]×[oy, oy+w]; its domain is (w-1)×(w-1)."""
    _check_size("square", w)
    return rectangle_polyform(w, w, origin)


def rectangle_polyform(width: int, height: int, origin: Point = (0, 0)) -> MPolyform:
    _check_size("rect", width, height)
    ox, oy = origin
    return polyform_from_polygon(
        [(ox, oy), (ox + width, oy), (ox + width, oy + height), (ox, oy + height)]
    )


def triangle_polyform(k: int, origin: Point = (0, 0)) -> MPolyform:
    """Right isosceles triangle with legs of length k along the axes."""
    _check_size("triangle", k)
    ox, oy = origin
    return polyform_from_polygon([(ox, oy), (ox + k, oy), (ox, oy + k)])


def diamond_polyform(k: int, origin: Point = (0, 0)) -> MPolyform:
    """Square rotated by 45° with corners (ox+k, oy), (ox+2k, oy+k), ..."""
    _check_size("diamond", k)
    ox, oy = origin
    return polyform_from_polygon(
        [(ox + k, oy), (ox + 2 * k, oy + k), (ox + k, oy + 2 * k), (ox, oy + k)]
    )


def extended_polyform(P: MPolyform) -> Optional[MPolyform]:
    """
    P plus the smallest outside triangle adjacent to P that leaves the domain unchanged.

    Returns:
        The extended polyform, or None if every adjacent triangle changes the domain.
    """
    base_domain = domain_of(P)
    outside = sorted(
        {n for t in P.triangles for n in t.neighbors() if n not in P.triangles}
    )
    for t in outside:
        candidate = MPolyform(P.triangles | {t})
        if domain_of(candidate) == base_domain:
            return candidate
    return None
