"""
DC-tilings: tilings of one M-polyform by directed, uniquely colored copies of another.

Edges are the maximal straight segments of a polyform's boundary. Every common edge of
two adjacent tiles must be a full edge of both, with equal color and equal direction once
the placements are applied; in practice adjacent tiles are mirror images across the edge.
"""

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Optional, Sequence

from src.errors import CertificateError, DomainMismatchError, NotAnAutomorphismError
from src.grid_domain import (
    IDENTITY,
    LINEAR_PARTS,
    NEIGHBOR_STEPS,
    Domain,
    LatticeIsometry,
    MPolyform,
    Point,
    TriangleId,
    boundary_polygon,
    domain_of,
    is_convex,
)
from src.models import PlacementModel, TilingCertificate, Verdict

logger = logging.getLogger(__name__)

Piece = frozenset[Point]


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


class DCEdge(NamedTuple):
    """A directed boundary edge in doubled coordinates."""

    color: int
    tail: Point
    head: Point

    def pieces(self) -> frozenset[Piece]:
        """The triangle sides making up the edge, as unordered point pairs."""
        dx, dy = self.head[0] - self.tail[0], self.head[1] - self.tail[1]
        if dx == 0 or dy == 0:
            step = (2 * _sign(dx), 2 * _sign(dy))
        else:
            step = (_sign(dx), _sign(dy))
        result = []
        p = self.tail
        while p != self.head:
            q = (p[0] + step[0], p[1] + step[1])
            result.append(frozenset((p, q)))
            p = q
        return frozenset(result)

    def moved(self, g: LatticeIsometry) -> "DCEdge":
        return DCEdge(self.color, g.apply_point2(self.tail), g.apply_point2(self.head))


@dataclass(frozen=True)
class DCPolyform:
    base: MPolyform
    edges: tuple[DCEdge, ...]

    def placed_edges(self, g: LatticeIsometry) -> list[DCEdge]:
        return [e.moved(g) for e in self.edges]


def boundary_edges(P: MPolyform) -> DCPolyform:
    """
    Colors the maximal boundary segments 0, 1, 2, ... counterclockwise from the
    lexicographically smallest boundary point; each edge points along the traversal.

    Raises:
        PolyformTopologyError: if the boundary has holes or pinch points.
    """
    corners = boundary_polygon(P)
    n = len(corners)
    edges = tuple(DCEdge(i, corners[i], corners[(i + 1) % n]) for i in range(n))
    return DCPolyform(P, edges)


@dataclass(frozen=True)
class TilePlacement:
    isometry: LatticeIsometry

    @property
    def sign(self) -> int:
        """+1 for translations and rotations, -1 when a reflection is involved."""
        return self.isometry.sign


@dataclass(frozen=True)
class DCTiling:
    tile_template: DCPolyform
    target: MPolyform
    placements: tuple[TilePlacement, ...]

    def __len__(self) -> int:
        return len(self.placements)

    @cached_property
    def source_domain(self) -> Domain:
        return domain_of(self.tile_template.base)

    @cached_property
    def target_domain(self) -> Domain:
        return domain_of(self.target)

    @property
    def signs(self) -> list[int]:
        return [p.sign for p in self.placements]

    @cached_property
    def vertex_maps(self) -> tuple[dict[Point, Point], ...]:
        return vertex_maps(self)

    @cached_property
    def internal_boundary(self) -> frozenset[Point]:
        return internal_boundaries(self)

    def tile_triangles(self, i: int) -> frozenset[TriangleId]:
        g = self.placements[i].isometry
        return frozenset(g.apply_triangle(t) for t in self.tile_template.base.triangles)


def identity_tiling(P: MPolyform) -> DCTiling:
    return DCTiling(boundary_edges(P), P, (TilePlacement(IDENTITY),))


def vertex_maps(T: DCTiling) -> tuple[dict[Point, Point], ...]:
    """ψ_i: the restriction of placement i to the source domain."""
    return tuple(
        {v: p.isometry.apply_point(v) for v in T.source_domain.vertices} for p in T.placements
    )


def internal_boundaries(T: DCTiling) -> frozenset[Point]:
    """Target vertices covered by no tile domain; they lie on common tile edges."""
    covered = set()
    for psi in T.vertex_maps:
        covered.update(psi.values())
    return T.target_domain.vertex_set - covered


def _edge_problems(T: DCTiling) -> list[str]:
    owners: dict[Piece, list[tuple[int, DCEdge]]] = {}
    for i, placement in enumerate(T.placements):
        for edge in T.tile_template.placed_edges(placement.isometry):
            for piece in edge.pieces():
                owners.setdefault(piece, []).append((i, edge))

    problems = []
    seen: set[tuple] = set()
    for piece, entries in owners.items():
        if len(entries) < 2:
            continue
        (i, a), (j, b) = entries
        key = (i, a.color, j, b.color)
        if key in seen:
            continue
        seen.add(key)
        if a.pieces() != b.pieces():
            problems.append(f"Tiles {i} and {j} share only part of edges {a.color} and {b.color}")
        elif a.color != b.color:
            problems.append(f"Tiles {i} and {j} meet with colors {a.color} and {b.color}")
        elif (a.tail, a.head) != (b.tail, b.head):
            problems.append(f"Tiles {i} and {j} meet on color {a.color} with opposite directions")
    return problems


def validate_tiling(T: DCTiling) -> Verdict:
    """
    Checks that the placed tiles partition the target, that common edges match in color
    and direction, and that the tile domains are disjoint lattice sets.
    """
    problems = []
    covered: set[TriangleId] = set()
    for i in range(len(T.placements)):
        tile = T.tile_triangles(i)
        overlap = covered & tile
        if overlap:
            problems.append(f"Tile {i} overlaps earlier tiles in {len(overlap)} triangles")
        covered |= tile
    outside = covered - T.target.triangles
    missing = T.target.triangles - covered
    if outside:
        problems.append(f"{len(outside)} triangles lie outside the target")
    if missing:
        problems.append(f"{len(missing)} target triangles are not covered")

    if not problems:
        problems += _edge_problems(T)

    if not problems:
        seen: set[Point] = set()
        target = T.target_domain.vertex_set
        for i, psi in enumerate(T.vertex_maps):
            image = set(psi.values())
            if image & seen:
                problems.append(f"Domain of tile {i} overlaps another tile domain")
            if not image <= target:
                problems.append(f"Domain of tile {i} leaves the target domain")
            seen |= image

    if problems:
        return Verdict(holds=False, detail="; ".join(problems))
    return Verdict(holds=True, detail=f"{len(T)} tiles")


def _components(points: set[Point]) -> list[frozenset[Point]]:
    remaining = set(points)
    result = []
    while remaining:
        start = remaining.pop()
        component = {start}
        queue = deque([start])
        while queue:
            x, y = queue.popleft()
            for sx, sy in NEIGHBOR_STEPS:
                w = (x + sx, y + sy)
                if w in remaining:
                    remaining.discard(w)
                    component.add(w)
                    queue.append(w)
        result.append(frozenset(component))
    return result


def tiling_domains_separated(T: DCTiling) -> bool:
    """Removing the internal boundary splits the target domain into exactly the tile domains."""
    rest = set(T.target_domain.vertex_set - T.internal_boundary)
    components = set(_components(rest))
    return components == {frozenset(psi.values()) for psi in T.vertex_maps}


def check_corollary_ibs(T: DCTiling, signs: Optional[Sequence[int]] = None) -> bool:
    """
    At every internal-boundary vertex b, the signs of b's neighbors that are copies of one
    source vertex sum to zero.

    Args:
        T: A valid tiling.
        signs: Per-placement signs overriding the placements' own.
    """
    signs = list(signs) if signs is not None else T.signs
    origin: dict[Point, tuple[Point, int]] = {}
    for psi, s in zip(T.vertex_maps, signs):
        for v_a, v_b in psi.items():
            origin[v_b] = (v_a, s)
    for bx, by in sorted(T.internal_boundary):
        totals: dict[Point, int] = {}
        for sx, sy in NEIGHBOR_STEPS:
            w = (bx + sx, by + sy)
            if w in origin:
                v_a, s = origin[w]
                totals[v_a] = totals.get(v_a, 0) + s
        unbalanced = [v for v, total in totals.items() if total != 0]
        if unbalanced:
            logger.debug(f"Signs around internal-boundary vertex {(bx, by)} do not cancel")
            return False
    return True


class _Search:
    """Backtracking over placements anchored at the smallest uncovered target triangle."""

    def __init__(self, template: DCPolyform, target: MPolyform, limit: int):
        self.template = template
        self.target = target
        self.limit = limit
        self.order = sorted(target.triangles)
        self.orientations = []
        for rot, reflect in sorted(LINEAR_PARTS):
            g = LatticeIsometry(rot, reflect)
            shape = sorted(g.apply_triangle(t) for t in template.base.triangles)
            self.orientations.append((g, shape))
        self.covered: set[TriangleId] = set()
        self.owners: dict[Piece, tuple[DCEdge, frozenset[Piece]]] = {}
        self.placements: list[TilePlacement] = []
        self.results: list[DCTiling] = []

    def _anchor(self) -> Optional[TriangleId]:
        for t in self.order:
            if t not in self.covered:
                return t
        return None

    def _fits(self, edges: list[tuple[DCEdge, frozenset[Piece]]]) -> bool:
        for edge, pieces in edges:
            matches = [self.owners.get(piece) for piece in pieces]
            if all(m is None for m in matches):
                continue
            if any(m is None for m in matches):
                return False
            other, other_pieces = matches[0]
            if other_pieces != pieces or other.color != edge.color:
                return False
            if (other.tail, other.head) != (edge.tail, edge.head):
                return False
        return True

    def place(self, g: LatticeIsometry, triangles: Iterable[TriangleId]) -> Optional[list]:
        triangles = list(triangles)
        if any(t in self.covered or t not in self.target.triangles for t in triangles):
            return None
        edges = [(e, e.pieces()) for e in self.template.placed_edges(g)]
        if not self._fits(edges):
            return None
        added = []
        for edge, pieces in edges:
            for piece in pieces:
                if piece not in self.owners:
                    self.owners[piece] = (edge, pieces)
                    added.append(piece)
        self.covered.update(triangles)
        self.placements.append(TilePlacement(g))
        return [triangles, added]

    def undo(self, record: list) -> None:
        triangles, added = record
        self.covered.difference_update(triangles)
        for piece in added:
            del self.owners[piece]
        self.placements.pop()

    def run(self) -> None:
        if len(self.results) >= self.limit:
            return
        anchor = self._anchor()
        if anchor is None:
            self.results.append(DCTiling(self.template, self.target, tuple(self.placements)))
            logger.debug(f"Tiling {len(self.results)} found with {len(self.placements)} tiles")
            return
        for g0, shape in self.orientations:
            first = shape[0]
            if first.side != anchor.side:
                continue
            tx, ty = anchor.square_x - first.square_x, anchor.square_y - first.square_y
            g = LatticeIsometry(g0.rot, g0.reflect, tx, ty)
            record = self.place(g, (TriangleId(t.square_x + tx, t.square_y + ty, t.side) for t in shape))
            if record is None:
                continue
            self.run()
            self.undo(record)
            if len(self.results) >= self.limit:
                return


def search_tilings(
    P1: MPolyform,
    P2: MPolyform,
    limit: int = 100,
    fixed: Sequence[LatticeIsometry] = (),
) -> list[DCTiling]:
    """
    DC-tilings of P2 by P1 in a deterministic order.

    Args:
        P1: Tile polyform.
        P2: Target polyform.
        limit: Maximum number of tilings returned.
        fixed: Placements every returned tiling must start with.

    Returns:
        Up to `limit` tilings; an empty list when none exists.
    """
    if not is_convex(P1) or not is_convex(P2):
        logger.warning("Tiling search on non-convex polyforms; the monomorphism may not exist")
    if len(P2) % len(P1):
        return []
    search = _Search(boundary_edges(P1), P2, limit)
    for g in fixed:
        triangles = [g.apply_triangle(t) for t in P1.triangles]
        if search.place(g, triangles) is None:
            return []
    search.run()
    logger.info(f"Found {len(search.results)} tilings of a {len(P2)}-triangle polyform")
    return search.results


def find_tiling_with_identity(P1: MPolyform, P2: MPolyform) -> Optional[DCTiling]:
    """A tiling of P2 containing the untransformed copy of P1, or None."""
    found = search_tilings(P1, P2, limit=1, fixed=(IDENTITY,))
    return found[0] if found else None


def compose_tilings(T1: DCTiling, T2: DCTiling) -> DCTiling:
    """Nested tiling P1 → P3 from T1: P1 → P2 and T2: P2 → P3, with placements g2 ∘ g1."""
    if T1.target != T2.tile_template.base:
        raise DomainMismatchError("The first tiling's target is not the second tiling's tile")
    placements = tuple(
        TilePlacement(outer.isometry.compose(inner.isometry))
        for outer in T2.placements
        for inner in T1.placements
    )
    return DCTiling(T1.tile_template, T2.target, placements)


def tiling_to_certificate(T: DCTiling, template_ref: str, target_ref: str) -> TilingCertificate:
    return TilingCertificate(
        template=template_ref,
        target=target_ref,
        placements=[
            PlacementModel(
                rot=p.isometry.rot,
                reflect=p.isometry.reflect,
                dx=p.isometry.dx,
                dy=p.isometry.dy,
                sign=p.sign,
            )
            for p in T.placements
        ],
    )


def _integer_translation(value) -> int:
    if float(value) != int(value):
        raise CertificateError(f"Translation {value} does not map M onto itself")
    return int(value)


def tiling_from_certificate(
    certificate: TilingCertificate, template: MPolyform, target: MPolyform
) -> DCTiling:
    """
    Rebuilds a tiling; the polyforms are the resolved certificate references.

    Raises:
        CertificateError: if a placement is not an automorphism of M or its sign is wrong.
    """
    placements = []
    for k, model in enumerate(certificate.placements):
        try:
            g = LatticeIsometry(
                model.rot, model.reflect, _integer_translation(model.dx), _integer_translation(model.dy)
            )
        except NotAnAutomorphismError as e:
            raise CertificateError(f"Placement {k}: {e}")
        if g.sign != model.sign:
            raise CertificateError(f"Placement {k} declares sign {model.sign}, expected {g.sign}")
        placements.append(TilePlacement(g))
    return DCTiling(boundary_edges(template), target, tuple(placements))
