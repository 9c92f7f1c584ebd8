"""
Abelian sandpile engine on a lattice domain with sink-by-contraction.

Configurations are integer vectors indexed like `Domain.vertices`. Toppling a vertex
subtracts 4 there and adds 1 to each neighbor inside the domain; grains pushed across a
sink edge disappear.
"""

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from sympy import factorint

from src.config import APP_CONFIG, SCHEDULERS
from src.errors import (
    DomainMismatchError,
    InvariantError,
    NegativeConfigurationError,
)
from src.exact_algebra import det_exact, invariant_factors, solve_exact
from src.grid_domain import Domain, Point, laplacian_apply, reduced_laplacian

logger = logging.getLogger(__name__)

INT64_HEADROOM = 2**62


@dataclass(frozen=True)
class ChipConfig:
    domain: Domain
    values: tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        if len(values) != len(self.domain):
            raise DomainMismatchError(
                f"Configuration has {len(values)} values for a domain of {len(self.domain)} vertices"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, domain: Domain) -> "ChipConfig":
        return cls(domain, (0,) * len(domain))

    @classmethod
    def constant(cls, domain: Domain, value: int) -> "ChipConfig":
        return cls(domain, (value,) * len(domain))

    @classmethod
    def unit(cls, domain: Domain, vertex: Point, amount: int = 1) -> "ChipConfig":
        values = [0] * len(domain)
        values[domain.index[vertex]] = amount
        return cls(domain, tuple(values))

    @classmethod
    def from_mapping(cls, domain: Domain, mapping: dict[Point, int]) -> "ChipConfig":
        return cls(domain, tuple(mapping.get(v, 0) for v in domain.vertices))

    def __getitem__(self, vertex: Point) -> int:
        return self.values[self.domain.index[vertex]]

    def _check(self, other: "ChipConfig") -> None:
        if other.domain is not self.domain and other.domain != self.domain:
            raise DomainMismatchError("Configurations live on different domains")

    def __add__(self, other: "ChipConfig") -> "ChipConfig":
        self._check(other)
        return ChipConfig(self.domain, tuple(a + b for a, b in zip(self.values, other.values)))

    def __sub__(self, other: "ChipConfig") -> "ChipConfig":
        self._check(other)
        return ChipConfig(self.domain, tuple(a - b for a, b in zip(self.values, other.values)))

    def __neg__(self) -> "ChipConfig":
        return ChipConfig(self.domain, tuple(-a for a in self.values))

    def scale(self, k: int) -> "ChipConfig":
        return ChipConfig(self.domain, tuple(k * a for a in self.values))

    def is_stable(self) -> bool:
        return all(0 <= v <= 3 for v in self.values)

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.values)

    def as_grid(self) -> list[list[Optional[int]]]:
        """Rows from north to south over the bounding box; None outside the domain."""
        x0, y0, x1, y1 = self.domain.bounding_box
        index = self.domain.index
        return [
            [self.values[index[(x, y)]] if (x, y) in index else None for x in range(x0, x1 + 1)]
            for y in range(y1, y0 - 1, -1)
        ]


@dataclass(frozen=True)
class GroupElement:
    """A stable recurrent configuration, the unique representative of its class."""

    rep: ChipConfig

    @property
    def domain(self) -> Domain:
        return self.rep.domain

    @property
    def values(self) -> tuple[int, ...]:
        return self.rep.values


def burning_configuration(domain: Domain) -> ChipConfig:
    """β(v) = number of sink edges at v."""
    return ChipConfig(domain, domain.sink_edges)


def _resolve_scheduler(domain: Domain, scheduler: Optional[str]) -> str:
    scheduler = scheduler or APP_CONFIG.scheduler
    if scheduler not in SCHEDULERS:
        raise ValueError(f"Unknown scheduler {scheduler}, expected one of {SCHEDULERS}")
    if scheduler == "auto":
        return "queue" if len(domain) <= APP_CONFIG.queue_max_vertices else "parallel"
    return scheduler


def _topple_queue(domain: Domain, values: list[int]) -> tuple[list[int], list[int]]:
    neighbors = domain.neighbors
    odometer = [0] * len(values)
    pending = deque(i for i, v in enumerate(values) if v >= 4)
    queued = [v >= 4 for v in values]
    while pending:
        v = pending.popleft()
        queued[v] = False
        k = values[v] // 4
        if k == 0:
            continue
        values[v] -= 4 * k
        odometer[v] += k
        for w in neighbors[v]:
            values[w] += k
            if values[w] >= 4 and not queued[w]:
                queued[w] = True
                pending.append(w)
    return values, odometer


def _topple_parallel(domain: Domain, values: list[int]) -> tuple[list[int], list[int]]:
    n = len(values)
    peak = max(values) + 4
    dtype = np.int64 if peak * (n + 1) ** 2 < INT64_HEADROOM else object
    padded = np.full((n, 4), n, dtype=np.int64)
    for i, nbrs in enumerate(domain.neighbors):
        padded[i, : len(nbrs)] = nbrs

    heights = np.array(values, dtype=dtype)
    odometer = np.zeros(n, dtype=dtype)
    rounds = 0
    while True:
        k = heights // 4
        if not k.any():
            break
        rounds += 1
        heights -= 4 * k
        odometer += k
        k_ext = np.append(k, np.zeros(1, dtype=dtype))
        heights += k_ext[padded].sum(axis=1)
    logger.debug(f"Parallel toppling finished after {rounds} rounds on {n} vertices")
    return [int(v) for v in heights], [int(v) for v in odometer]


def stabilize(
    c: ChipConfig, scheduler: Optional[str] = None
) -> tuple[ChipConfig, tuple[int, ...]]:
    """
    Topples until every vertex holds at most 3 grains.

    Args:
        c: Nonnegative configuration.
        scheduler: "queue", "parallel" or "auto"; defaults to the configured scheduler.

    Returns:
        The stable configuration and the odometer (topplings per vertex).
    """
    if not c.is_nonnegative():
        raise NegativeConfigurationError("stabilize needs a nonnegative configuration")
    mode = _resolve_scheduler(c.domain, scheduler)
    if mode == "queue":
        values, odometer = _topple_queue(c.domain, list(c.values))
    else:
        values, odometer = _topple_parallel(c.domain, list(c.values))
    return ChipConfig(c.domain, tuple(values)), tuple(odometer)


def is_recurrent(c: ChipConfig) -> bool:
    """Burning test: v burns once c(v) reaches its count of unburnt neighbors."""
    if not c.is_stable():
        return False
    neighbors = c.domain.neighbors
    unburnt_degree = [len(n) for n in neighbors]
    burnt = [False] * len(c.values)
    ready = deque(i for i, v in enumerate(c.values) if v >= unburnt_degree[i])
    count = 0
    while ready:
        v = ready.popleft()
        if burnt[v]:
            continue
        burnt[v] = True
        count += 1
        for w in neighbors[v]:
            if not burnt[w]:
                unburnt_degree[w] -= 1
                if c.values[w] >= unburnt_degree[w]:
                    ready.append(w)
    return count == len(c.values)


class SandpileGroup:
    """
    The sandpile group of one domain.

    The identity is computed on first use and kept on the instance; nothing is cached
    at module level.
    """

    def __init__(self, domain: Domain, scheduler: Optional[str] = None):
        self.domain = domain
        self.scheduler = scheduler
        self._identity: Optional[GroupElement] = None
        self._identity_witness: Optional[tuple[int, ...]] = None
        self._order: Optional[int] = None

    def _own(self, c: ChipConfig) -> None:
        if c.domain is not self.domain and c.domain != self.domain:
            raise DomainMismatchError("Configuration does not belong to this sandpile group")

    def stabilize(self, c: ChipConfig) -> tuple[ChipConfig, tuple[int, ...]]:
        return stabilize(c, self.scheduler)

    def identity(self) -> GroupElement:
        if self._identity is None:
            self._compute_identity()
        return self._identity

    def _compute_identity(self) -> None:
        twice_max = ChipConfig.constant(self.domain, 6)
        s1, u1 = self.stabilize(twice_max)
        e, u2 = self.stabilize(twice_max - s1)
        element = GroupElement(e)
        if not is_recurrent(e):
            raise InvariantError("Identity candidate is not recurrent")
        if self.stabilize(e + e)[0] != e:
            raise InvariantError("Identity candidate is not idempotent")
        self._identity = element
        # e = Δ(u2 - u1)
        self._identity_witness = tuple(b - a for a, b in zip(u1, u2))
        logger.debug(f"Identity computed on a domain of {len(self.domain)} vertices")

    def element(self, c: ChipConfig) -> GroupElement:
        """Wraps a configuration already known to be stable and recurrent."""
        self._own(c)
        if not is_recurrent(c):
            raise InvariantError("Configuration is not a recurrent representative")
        return GroupElement(c)

    def add(self, a: GroupElement, b: GroupElement) -> GroupElement:
        self._own(a.rep)
        self._own(b.rep)
        return GroupElement(self.stabilize(a.rep + b.rep)[0])

    def scale(self, a: GroupElement, k: int) -> GroupElement:
        """k·a by double-and-add; negative k scales the inverse."""
        if k < 0:
            return self.scale(self.negate(a), -k)
        result = self.identity()
        base = a
        while k:
            if k & 1:
                result = self.add(result, base)
            k >>= 1
            if k:
                base = self.add(base, base)
        return result

    def negate(self, a: GroupElement) -> GroupElement:
        return self.canonical_rep(-a.rep)

    def order(self) -> int:
        if self._order is None:
            self._order = group_order(self.domain)
        return self._order

    def canonical_rep(self, x: ChipConfig) -> GroupElement:
        """
        The recurrent representative of x + Δ(Z^Γ).

        x is shifted by a multiple of p = -Δh, h a discrete paraboloid that is nonnegative
        on the outer ring, so that p >= 4 everywhere; the shifted configuration is
        stabilized and added to the identity. The accumulated potential z with
        result - x = Δz is checked exactly.
        """
        self._own(x)
        domain = self.domain
        e = self.identity()

        shift = 0
        low = min(x.values)
        if low < 0:
            shift = (-low + 3) // 4
        potential = [0] * len(domain)
        start = x
        if shift:
            h = self._paraboloid()
            p = [-v for v in laplacian_apply(domain, h)]
            start = x + ChipConfig(domain, tuple(shift * v for v in p))
            potential = [-shift * v for v in h]

        stable, u1 = self.stabilize(start)
        result, u3 = self.stabilize(stable + e.rep)
        witness = [
            z + a + w + b
            for z, a, w, b in zip(potential, u1, self._identity_witness, u3)
        ]
        difference = [r - v for r, v in zip(result.values, x.values)]
        if laplacian_apply(domain, witness) != difference:
            raise InvariantError("Canonical representative left the class of its input")
        if not is_recurrent(result):
            raise InvariantError("Canonical representative is not recurrent")
        if self.stabilize(result + burning_configuration(domain))[0] != result:
            raise InvariantError("Canonical representative is not fixed by the burning configuration")
        return GroupElement(result)

    def _paraboloid(self) -> list[int]:
        x0, y0, _, _ = self.domain.bounding_box
        ring = self.domain.outer_ring
        radius = max((x - x0) ** 2 + (y - y0) ** 2 for x, y in ring)
        return [radius - (x - x0) ** 2 - (y - y0) ** 2 for x, y in self.domain.vertices]

    def is_identity(self, a: GroupElement) -> bool:
        return a == self.identity()

    def is_trivial_class(self, x: ChipConfig) -> bool:
        """True iff x lies in Δ(Z^Γ)."""
        self._own(x)
        if len(self.domain) <= APP_CONFIG.lattice_max_vertices:
            solution = solve_exact(reduced_laplacian(self.domain), list(x.values))
            return all(v.denominator == 1 for v in solution)
        return self.canonical_rep(x) == self.identity()

    def same_class(self, x: ChipConfig, y: ChipConfig) -> bool:
        return self.is_trivial_class(x - y)

    def element_order(self, a: GroupElement, multiple: Optional[int] = None) -> int:
        """
        Least n >= 1 with n·a = 0.

        Args:
            a: Group element.
            multiple: A known multiple of the order; defaults to the group order.
        """
        self._own(a.rep)
        n = multiple if multiple is not None else self.order()
        if n < 1:
            raise ValueError(f"Order multiple must be positive, got {n}")
        e = self.identity()
        if self.scale(a, n) != e:
            raise InvariantError(f"{n} is not a multiple of the element order")
        for p, exponent in factorint(n).items():
            for _ in range(exponent):
                if self.scale(a, n // p) == e:
                    n //= p
                else:
                    break
        return n

    def recurrent_configurations(self) -> Iterator[GroupElement]:
        yield from recurrent_configurations(self.domain)


def group_add(a: GroupElement, b: GroupElement) -> GroupElement:
    if a.domain is not b.domain and a.domain != b.domain:
        raise DomainMismatchError("Group elements live on different domains")
    return GroupElement(stabilize(a.rep + b.rep)[0])


def identity(domain: Domain) -> GroupElement:
    return SandpileGroup(domain).identity()


def group_order(domain: Domain) -> int:
    """|det Δ_Γ|."""
    return abs(det_exact(reduced_laplacian(domain)))


def group_decomposition(domain: Domain) -> list[int]:
    """Invariant factors greater than one of the reduced Laplacian."""
    return [d for d in invariant_factors(reduced_laplacian(domain)) if d > 1]


def canonical_rep(x: ChipConfig) -> GroupElement:
    return SandpileGroup(x.domain).canonical_rep(x)


def element_order(a: GroupElement, multiple: Optional[int] = None) -> int:
    return SandpileGroup(a.domain).element_order(a, multiple)


def group_scale(a: GroupElement, k: int) -> GroupElement:
    return SandpileGroup(a.domain).scale(a, k)


def group_negate(a: GroupElement) -> GroupElement:
    return SandpileGroup(a.domain).negate(a)


def is_trivial_class(domain: Domain, x: ChipConfig) -> bool:
    return SandpileGroup(domain).is_trivial_class(x)


def same_class(domain: Domain, x: ChipConfig, y: ChipConfig) -> bool:
    return SandpileGroup(domain).same_class(x, y)


def recurrent_configurations(domain: Domain, max_vertices: int = 8) -> Iterator[GroupElement]:
    """All recurrent stable configurations, by brute force over 4^|Γ| candidates."""
    if len(domain) > max_vertices:
        raise ValueError(
            f"Enumerating 4^{len(domain)} configurations is not supported (limit {max_vertices} vertices)"
        )
    for values in itertools.product(range(4), repeat=len(domain)):
        c = ChipConfig(domain, values)
        if is_recurrent(c):
            yield GroupElement(c)


def config_from_values(domain: Domain, values: Sequence[int]) -> ChipConfig:
    return ChipConfig(domain, tuple(values))
