import random

import pytest

from src.errors import DomainMismatchError, NegativeConfigurationError
from src.grid_domain import laplacian_apply
from src.sandpile_core import (
    ChipConfig,
    SandpileGroup,
    burning_configuration,
    group_add,
    group_decomposition,
    group_order,
    identity,
    is_recurrent,
    recurrent_configurations,
    stabilize,
)

from tests.conftest import square


@pytest.mark.parametrize(
    "n, expected",
    [(1, 4), (2, 192), (3, 100352), (5, 32565539635200)],
)
def test_group_order(n, expected):
    assert group_order(square(n)) == expected


def test_group_decomposition():
    assert group_decomposition(square(1)) == [4]
    factors = group_decomposition(square(5))
    product = 1
    for d in factors:
        product *= d
    assert product == 32565539635200


def test_recurrent_configurations_count_matches_order():
    assert sum(1 for _ in recurrent_configurations(square(2))) == 192


def test_identity_of_3x3(square_3x3):
    e = SandpileGroup(square_3x3).identity()
    assert e.rep.as_grid() == [[2, 1, 2], [1, 0, 1], [2, 1, 2]]


def test_identity_of_1x1():
    assert SandpileGroup(square(1)).identity().values == (0,)


def test_schedulers_agree(square_5x5):
    rng = random.Random(7)
    c = ChipConfig(square_5x5, tuple(rng.randrange(12) for _ in range(25)))
    queue, odometer_q = stabilize(c, "queue")
    parallel, odometer_p = stabilize(c, "parallel")
    assert queue == parallel
    assert odometer_q == odometer_p


def test_stabilize_rejects_negative(square_3x3):
    with pytest.raises(NegativeConfigurationError):
        stabilize(ChipConfig.unit(square_3x3, (2, 2), -1))


def test_recurrence_and_burning(square_3x3):
    assert is_recurrent(ChipConfig.constant(square_3x3, 3))
    assert not is_recurrent(ChipConfig.zeros(square_3x3))
    beta = burning_configuration(square_3x3)
    assert sum(beta.values) == 12


def test_group_axioms(square_3x3):
    group = SandpileGroup(square_3x3)
    rng = random.Random(1)
    elements = [
        group.canonical_rep(ChipConfig(square_3x3, tuple(rng.randrange(-5, 8) for _ in range(9))))
        for _ in range(3)
    ]
    a, b, c = elements
    e = group.identity()
    assert group.add(a, e) == a
    assert group.add(a, b) == group.add(b, a)
    assert group.add(group.add(a, b), c) == group.add(a, group.add(b, c))
    assert group.add(a, group.negate(a)) == e


def test_canonical_rep_stays_in_class(square_3x3):
    group = SandpileGroup(square_3x3)
    x = ChipConfig(square_3x3, (-7, 3, 0, 12, -1, 5, 2, -3, 9))
    rep = group.canonical_rep(x)
    assert is_recurrent(rep.rep)
    assert group.same_class(rep.rep, x)


def test_laplacian_columns_are_trivial(square_3x3):
    group = SandpileGroup(square_3x3)
    column = [0] * 9
    center = square_3x3.index[(2, 2)]
    column[center] = -4
    for j in square_3x3.neighbors[center]:
        column[j] = 1
    assert group.is_trivial_class(ChipConfig(square_3x3, tuple(column)))
    assert not group.is_trivial_class(ChipConfig.unit(square_3x3, (2, 2)))


def test_element_orders_on_1x1():
    domain = square(1)
    group = SandpileGroup(domain)
    one = group.canonical_rep(ChipConfig(domain, (1,)))
    two = group.canonical_rep(ChipConfig(domain, (2,)))
    assert group.element_order(one) == 4
    assert group.element_order(two) == 2
    assert group.scale(one, 4) == group.identity()
    assert group.scale(one, -1) == group.canonical_rep(ChipConfig(domain, (3,)))


def test_domain_mismatch(square_3x3):
    group = SandpileGroup(square_3x3)
    with pytest.raises(DomainMismatchError):
        group.canonical_rep(ChipConfig.zeros(square(2)))
    with pytest.raises(DomainMismatchError):
        ChipConfig(square_3x3, (0, 0))


def test_full_group_table_on_2x2():
    domain = square(2)
    elements = list(recurrent_configurations(domain))
    members = set(elements)
    e = identity(domain)
    assert e in members
    for a in elements:
        assert group_add(a, e) == a
        for b in elements:
            assert group_add(a, b) in members
    rng = random.Random(3)
    for _ in range(300):
        a, b, c = (rng.choice(elements) for _ in range(3))
        assert group_add(group_add(a, b), c) == group_add(a, group_add(b, c))
        assert group_add(a, b) == group_add(b, a)


def test_schedulers_agree_and_conserve_chips():
    rng = random.Random(17)
    for _ in range(200):
        domain = square(rng.randint(1, 6))
        c = ChipConfig(domain, tuple(rng.randrange(16) for _ in domain.vertices))
        stable, odometer = stabilize(c, "queue")
        assert stabilize(c, "parallel") == (stable, odometer)
        assert stable.is_stable()
        assert all(k >= 0 for k in odometer)
        difference = [s - v for s, v in zip(stable.values, c.values)]
        assert difference == laplacian_apply(domain, list(odometer))


def test_canonical_rep_is_constant_on_classes():
    rng = random.Random(23)
    for n in (2, 3, 4):
        domain = square(n)
        group = SandpileGroup(domain)
        for _ in range(5):
            x = ChipConfig(domain, tuple(rng.randrange(-4, 8) for _ in domain.vertices))
            v = rng.randrange(len(domain))
            unit = [int(i == v) for i in range(len(domain))]
            shifted = x + ChipConfig(domain, tuple(laplacian_apply(domain, unit)))
            assert group.canonical_rep(shifted) == group.canonical_rep(x)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_canonical_rep_of_zero_is_identity(n):
    group = SandpileGroup(square(n))
    assert group.canonical_rep(ChipConfig.zeros(square(n))) == group.identity()
