import dataclasses
import random
from fractions import Fraction
from itertools import combinations

import pytest

from src.config import APP_CONFIG
from src.errors import DomainMismatchError, IntegralityError, InvariantError
from src.grid_domain import (
    LatticeIsometry,
    apply_isometry,
    domain_of,
    square_polyform,
    triangle_polyform,
    union_polyforms,
)
from src.harmonic import HarmonicFunction
from src.monomorphism import (
    GroupMap,
    automorphism_signature,
    compose,
    copy_paste,
    cure_functions,
    mu_apply,
    mu_matrix,
    paste_matrix,
    radical_cyclic_subgroup,
    verify_monomorphism,
)
from src.sandpile_core import ChipConfig, SandpileGroup, group_order
from src.tiling import (
    compose_tilings,
    find_tiling_with_identity,
    identity_tiling,
    search_tilings,
)

from tests.conftest import square


@pytest.fixture
def quartered_square():
    """square:4 tiled by four copies of square:2."""
    return find_tiling_with_identity(square_polyform(2), square_polyform(4))


def test_identity_tiling_gives_identity_map():
    T = identity_tiling(square_polyform(4))
    m = mu_matrix(T)
    n = len(T.source_domain)
    assert m.int_columns() == [[int(i == j) for i in range(n)] for j in range(n)]
    check = verify_monomorphism(m)
    assert check.holds
    assert check.method == "snf"
    assert check.image_order == check.source_order == 100352


def test_paste_matrix_signs(quartered_square):
    columns = paste_matrix(quartered_square)
    assert len(columns) == 1
    assert sorted(columns[0].values()) == [-1, -1, 1, 1]


def test_quartered_square_is_a_monomorphism(quartered_square):
    m = mu_matrix(quartered_square)
    assert m.is_integral()
    check = verify_monomorphism(m)
    assert check.well_defined and check.injective, check.diagnostics
    assert check.image_order == 4
    assert check.target_order == group_order(square(3))


def test_mu_apply_matches_linear_map(quartered_square):
    source = quartered_square.source_domain
    target_group = SandpileGroup(quartered_square.target_domain)
    a = SandpileGroup(source).canonical_rep(ChipConfig(source, (1,)))
    m = mu_matrix(quartered_square)
    expected = target_group.canonical_rep(m.apply_config(a.rep))
    assert mu_apply(quartered_square, a, target_group) == expected
    assert target_group.element_order(expected) == 4


def test_wrong_signs_are_not_integral(quartered_square):
    with pytest.raises(IntegralityError):
        GroupMap.from_paste(quartered_square, signs=[1, 1, 1, 1])
    m = GroupMap.from_paste(quartered_square, signs=[1, 1, 1, 1], check=False)
    check = verify_monomorphism(m)
    assert not check.well_defined
    assert not check.holds
    assert check.method == "none"
    assert check.diagnostics


def test_socle_method(quartered_square, monkeypatch):
    monkeypatch.setattr(APP_CONFIG, "snf_max_vertices", 0)
    check = verify_monomorphism(mu_matrix(quartered_square), samples=0)
    assert check.method == "socle"
    assert check.injective
    assert check.image_order == 4


def test_socle_cap_reports_not_injective(quartered_square, monkeypatch):
    monkeypatch.setattr(APP_CONFIG, "snf_max_vertices", 0)
    monkeypatch.setattr(APP_CONFIG, "socle_max_combinations", 0)
    check = verify_monomorphism(mu_matrix(quartered_square), samples=0)
    assert not check.injective
    assert check.image_order is None
    assert any("cap" in d for d in check.diagnostics)


def test_composition_matches_nested_tiling():
    p1 = triangle_polyform(4)
    p2 = union_polyforms(p1, apply_isometry(LatticeIsometry.reflection_across("x", 0), p1))
    p3 = union_polyforms(p2, apply_isometry(LatticeIsometry.reflection_across("x+y", 4), p2))
    t12 = find_tiling_with_identity(p1, p2)
    t23 = find_tiling_with_identity(p2, p3)
    composite = compose(mu_matrix(t12), mu_matrix(t23))
    direct = mu_matrix(compose_tilings(t12, t23))
    assert composite.columns == direct.columns
    assert composite.witness == direct.witness
    check = verify_monomorphism(composite)
    assert check.holds, check.diagnostics
    g1, g2, g3 = (SandpileGroup(domain_of(p)) for p in (p1, p2, p3))
    source = t12.source_domain
    rng = random.Random(3)
    for _ in range(100):
        a = g1.canonical_rep(ChipConfig(source, tuple(rng.randrange(0, 4) for _ in source.vertices)))
        expected = mu_apply(t23, mu_apply(t12, a, g2), g3)
        assert g3.canonical_rep(composite.apply_config(a.rep)) == expected


def test_compose_checks_domains(quartered_square):
    m = mu_matrix(quartered_square)
    with pytest.raises(DomainMismatchError):
        compose(m, m)


def test_compose_rejects_a_broken_witness(quartered_square):
    m = mu_matrix(quartered_square)
    broken = dataclasses.replace(m, witness=tuple({} for _ in m.witness))
    outer = mu_matrix(find_tiling_with_identity(square_polyform(4), square_polyform(8)))
    assert compose(m, outer).witness is not None
    with pytest.raises(InvariantError):
        compose(broken, outer)


def test_well_definedness_is_checked_without_the_witness(quartered_square):
    m = mu_matrix(quartered_square)
    check = verify_monomorphism(dataclasses.replace(m, witness=None), samples=0)
    assert check.holds, check.diagnostics
    assert not check.diagnostics

    forged = dataclasses.replace(m, witness=tuple({0: Fraction(1, 2)} for _ in m.witness))
    check = verify_monomorphism(forged, samples=0)
    assert check.holds
    assert any("Witness does not certify" in d for d in check.diagnostics)


def test_integral_map_off_the_laplacian_lattice():
    # Reads off one coordinate of the 2x2 grid into Z/4; Δ_A·e_v has entries 1.
    m = GroupMap(square(2), square(1), tuple((Fraction(int(i == 0)),) for i in range(4)))
    assert m.is_integral()
    check = verify_monomorphism(m, samples=0)
    assert not check.well_defined
    assert not check.holds
    assert any("Laplacian lattice" in d for d in check.diagnostics)


def test_witness_alone_above_the_lattice_limit(quartered_square, monkeypatch):
    monkeypatch.setattr(APP_CONFIG, "lattice_max_vertices", 0)
    check = verify_monomorphism(mu_matrix(quartered_square), samples=0)
    assert check.holds
    assert any("witness W alone" in d for d in check.diagnostics)


def test_mu_apply_checks_domain(quartered_square):
    other = square(2)
    a = SandpileGroup(other).identity()
    with pytest.raises(DomainMismatchError):
        mu_apply(quartered_square, a)


def test_one_vertex_automorphisms():
    tilings = search_tilings(square_polyform(2), square_polyform(2))
    assert len(tilings) == 8
    for T in tilings:
        signature = automorphism_signature(mu_matrix(T))
        # Rotations act trivially on Z/4, reflections by negation.
        assert signature == (((1,),) if T.placements[0].sign == 1 else ((3,),))


@pytest.mark.parametrize("w", [3, 4, 5])
def test_square_automorphisms_are_distinct(w):
    tilings = search_tilings(square_polyform(w), square_polyform(w))
    group = SandpileGroup(domain_of(square_polyform(w)))
    signatures = [automorphism_signature(mu_matrix(T), group) for T in tilings]
    assert len(signatures) == 8
    assert all(a != b for a, b in combinations(signatures, 2))
    for T in tilings:
        check = verify_monomorphism(mu_matrix(T), samples=0)
        assert check.holds, check.diagnostics
        assert check.image_order == check.source_order == group.order()


def test_cure_on_identity_tiling():
    P = square_polyform(4)
    T = identity_tiling(P)
    domain = T.source_domain
    h = HarmonicFunction({(x, y): x * y for x, y in domain.vertices})
    corrections, h_b = cure_functions(T, copy_paste(T, h))
    assert corrections == [(0,) * len(domain)]
    assert h_b.restrict(domain) == h.restrict(domain)


def test_cure_doubled_square():
    T = find_tiling_with_identity(square_polyform(3), square_polyform(6))
    source = T.source_domain
    h_a = HarmonicFunction({v: int(v == (1, 1)) for v in source.vertices})
    corrections, h_b = cure_functions(T, copy_paste(T, h_a))
    target = T.target_domain
    assert len(corrections) == 4
    assert h_b.is_integer()
    lap = h_b.domain_laplacian(target)
    assert all(lap[i] == 0 for i in target.interior_indices)
    for x, psi in zip(corrections, T.vertex_maps):
        assert all(x[target.index[v]] == 0 for v in psi.values())


@pytest.mark.parametrize("n, expected", [(1, 2), (5, 6), (8, 3)])
def test_radical_cyclic_subgroup(n, expected):
    element, order = radical_cyclic_subgroup(n)
    assert order == expected
    assert element.domain == square(n)
