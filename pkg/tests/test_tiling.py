import random

import pytest

from src.errors import CertificateError, DomainMismatchError
from src.grid_domain import (
    IDENTITY,
    LatticeIsometry,
    apply_isometry,
    extended_polyform,
    square_polyform,
    triangle_polyform,
    union_polyforms,
)
from src.models import PlacementModel, TilingCertificate
from src.monomorphism import compose, mu_matrix, verify_monomorphism
from src.sandpile_core import ChipConfig
from src.tiling import (
    DCTiling,
    TilePlacement,
    boundary_edges,
    check_corollary_ibs,
    compose_tilings,
    find_tiling_with_identity,
    identity_tiling,
    search_tilings,
    tiling_domains_separated,
    tiling_from_certificate,
    tiling_to_certificate,
    validate_tiling,
)


def _mirror_chain():
    """triangle:4 doubled across the y-axis, then across x + y = 4."""
    p1 = triangle_polyform(4)
    p2 = union_polyforms(p1, apply_isometry(LatticeIsometry.reflection_across("x", 0), p1))
    p3 = union_polyforms(p2, apply_isometry(LatticeIsometry.reflection_across("x+y", 4), p2))
    return p1, p2, p3


def test_boundary_edges_of_square():
    template = boundary_edges(square_polyform(2))
    assert [e.color for e in template.edges] == [0, 1, 2, 3]
    assert template.edges[0].tail == (0, 0) and template.edges[0].head == (4, 0)
    assert len(template.edges[0].pieces()) == 2


def test_square_tiles_itself_eight_ways():
    tilings = search_tilings(square_polyform(3), square_polyform(3))
    assert len(tilings) == 8
    assert {T.placements[0].sign for T in tilings} == {1, -1}
    assert all(validate_tiling(T) for T in tilings)


def test_extended_square_has_no_tiling():
    P = square_polyform(3)
    assert search_tilings(P, extended_polyform(P)) == []


def test_limit_caps_results():
    assert len(search_tilings(square_polyform(3), square_polyform(3), limit=3)) == 3


def test_identity_tiling_is_valid():
    T = identity_tiling(triangle_polyform(4))
    assert len(T) == 1
    assert validate_tiling(T)
    assert T.internal_boundary == frozenset()
    assert T.vertex_maps[0] == {v: v for v in T.source_domain.vertices}


def test_triangle_mirror_chain():
    p1, p2, p3 = _mirror_chain()
    t12 = find_tiling_with_identity(p1, p2)
    t23 = find_tiling_with_identity(p2, p3)
    assert t12 is not None and t23 is not None
    assert t12.placements[0].isometry == IDENTITY
    assert sorted(t12.signs) == [-1, 1]
    t13 = compose_tilings(t12, t23)
    assert len(t13) == 4
    assert validate_tiling(t13)
    assert tiling_domains_separated(t13)
    assert check_corollary_ibs(t13)


def test_square_by_half_square():
    T = find_tiling_with_identity(square_polyform(2), square_polyform(4))
    assert T is not None and len(T) == 4
    assert sorted(T.signs) == [-1, -1, 1, 1]
    assert (2, 2) in T.internal_boundary
    assert tiling_domains_separated(T)
    assert check_corollary_ibs(T)
    assert not check_corollary_ibs(T, [1, 1, 1, 1])


@pytest.mark.slow
@pytest.mark.parametrize("offset", [0, -4])
def test_square_chains_compose(offset):
    small = square_polyform(2)
    middle = square_polyform(10, origin=(offset, offset))
    large = square_polyform(50, origin=(6 * offset, 6 * offset))
    first = find_tiling_with_identity(small, middle)
    second = find_tiling_with_identity(middle, large)
    assert first is not None and second is not None
    assert len(first) == 25 and len(second) == 25
    nested = compose_tilings(first, second)
    assert len(nested) == 625
    assert validate_tiling(nested)

    composite = compose(mu_matrix(first), mu_matrix(second))
    direct = mu_matrix(nested)
    assert composite.columns == direct.columns
    assert composite.witness == direct.witness
    rng = random.Random(offset)
    source = nested.source_domain
    for _ in range(100):
        x = ChipConfig(source, tuple(rng.randrange(-20, 20) for _ in source.vertices))
        assert composite.apply_config(x) == direct.apply_config(x)
    check = verify_monomorphism(composite, samples=0)
    assert check.holds, check.diagnostics
    assert check.image_order == check.source_order == 4


def test_compose_requires_nested_polyforms():
    T = identity_tiling(square_polyform(3))
    U = identity_tiling(square_polyform(4))
    with pytest.raises(DomainMismatchError):
        compose_tilings(T, U)


def test_overlapping_tiles_fail_validation():
    P = square_polyform(2)
    template = boundary_edges(P)
    T = DCTiling(
        template,
        square_polyform(4),
        (TilePlacement(IDENTITY), TilePlacement(IDENTITY), TilePlacement(IDENTITY), TilePlacement(IDENTITY)),
    )
    verdict = validate_tiling(T)
    assert not verdict
    assert "overlaps" in verdict.detail


def test_certificate_round_trip():
    T = find_tiling_with_identity(square_polyform(2), square_polyform(4))
    certificate = tiling_to_certificate(T, "square:2", "square:4")
    rebuilt = tiling_from_certificate(certificate, square_polyform(2), square_polyform(4))
    assert rebuilt.placements == T.placements


def test_certificate_rejects_half_translation_and_wrong_sign():
    half = TilingCertificate(
        template="square:2",
        target="square:2",
        placements=[PlacementModel(rot=0, reflect=False, dx=0.5, dy=0, sign=1)],
    )
    with pytest.raises(CertificateError):
        tiling_from_certificate(half, square_polyform(2), square_polyform(2))
    wrong = TilingCertificate(
        template="square:2",
        target="square:2",
        placements=[PlacementModel(rot=0, reflect=True, dx=0, dy=2, sign=1)],
    )
    with pytest.raises(CertificateError):
        tiling_from_certificate(wrong, square_polyform(2), square_polyform(2))
