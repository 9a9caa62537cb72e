from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import load
from oracle import brute_octahedral, random_bipartite
from drl.lang import DvsError, RefinementSpec, parse_refinement, print_refinement, print_system
from drl.lattice import (Doubled, apply_refinement, doubling_outside, fibre_product_plus, fibre_product_plus_count,
                         fibre_signature_classes, fibre_sizes, generate_radical_twists, largest_class, rho_image,
                         twist_constant)
from drl.specializer import at_q
from drl.stats import octahedral_sum


def test_rho_image_of_tower(tower):
    s = at_q(tower, 7)
    assert len(rho_image(s, (0, 1))) == 22
    assert int(fibre_sizes(s, (0, 1)).sum()) == 49


def test_signature_classes_of_tower(tower):
    classes = fibre_signature_classes(at_q(tower, 7), (0, 1))
    assert [(c.key, len(c.points)) for c in classes] == [((), 27), ((1,), 4), ((1, 2), 3), ((2,), 12), ((2, 2), 3)]
    assert largest_class(classes).key == ()
    assert sum(len(c.points) for c in classes) == 49


def test_sqrt_cover_classes():
    s = at_q(load("sqrt_cover"), 7)
    classes = fibre_signature_classes(s, (1,))
    assert sorted(len(c.points) for c in classes) == [1, 3, 3]
    assert len(rho_image(s, (1,))) == 4


def test_refinement_moves_z_down(tower_refined):
    text = print_system(tower_refined)
    assert "sort 1: vars z; eqs s(x1) - x1, z^2 - x1, s(z) - z" in text
    # the cover keeps its equations; only the declaration moves
    assert "cover {0,1}: vars t; eqs z^2 - x1, s(z) - z, t^2 - x0 - z, s(t) - t" in text


def test_refinement_preserves_top_count(tower, tower_refined):
    for q in (7, 11):
        assert len(at_q(tower_refined, q).omega((0, 1))) == len(at_q(tower, q).omega((0, 1)))


def test_refinement_name_collision():
    ref = parse_refinement("char 7\nrefine {2}: vars w; eqs w - x2", 7)
    with pytest.raises(DvsError) as e:
        apply_refinement(load("squares3"), ref)
    assert e.value.diagnostics[0].code == "NAME_COLLISION"


def test_identity_refinement(tower):
    assert apply_refinement(tower, RefinementSpec()) == tower


def test_radical_twists(tower):
    cubic = load("cubic_cover")
    assert sorted(twist_constant(r) for r in generate_radical_twists(cubic, "w")) == [1, 2, 4]
    z6 = [r for r in generate_radical_twists(tower, "z") if twist_constant(r) == 6][0]
    assert print_refinement(z6).strip() == "refine {1}: vars z_6; eqs z_6^2 - x1, s(z_6) + z_6"
    t1 = [r for r in generate_radical_twists(tower, "t") if twist_constant(r) == 1][0]
    assert t1.targets[0].subset == (0, 1)


def test_omega_plus(tower, tower_refined):
    s = at_q(tower, 7)
    ident = at_q(apply_refinement(tower, RefinementSpec()), 7)
    assert fibre_product_plus_count(s, ident, (0, 1)) == 49
    sign = [r for r in generate_radical_twists(tower, "z") if twist_constant(r) == 6][0]
    cand = at_q(apply_refinement(tower, sign), 7, 2)
    s2 = at_q(tower, 7, 2)
    plus = fibre_product_plus(s2, cand, (0, 1))
    assert len(plus) == fibre_product_plus_count(s2, cand, (0, 1)) == 7
    assert "z_6'" in plus.coords


def test_doubling_layout(tower_refined):
    d = Doubled(at_q(tower_refined, 7), (0, 1))
    assert d.coords == ("x0_0", "x0_1", "x1_0", "x1_1", "z_0", "z_1")
    assert d.count() == 2401
    assert sum(1 for _ in d) == 2401


def test_doubling_outside_keeps_u_single(tower_refined):
    d = doubling_outside(at_q(tower_refined, 7), (0,))
    assert "x0" in d.coords and "x1_0" in d.coords
    assert d.count() == 7 * 49


def test_f3_diagonal_octahedral_sum():
    s = at_q(load("diag3"), 3)
    d = Doubled(s, (0, 1))
    assert d.count() == 81
    f = lambda r: (1 if r[0] == r[1] else 0) - Fraction(1, 3)
    assert octahedral_sum(s, (0, 1), f, "naive") == 2
    assert octahedral_sum(s, (0, 1), f, "contracted") == 2
    assert octahedral_sum(s, (0, 1), [0] * 9) == 0


def test_doubling_against_oracle(tower):
    s = at_q(tower, 5)
    f = [Fraction(k % 3 - 1, 2) for k in range(len(s.boundary((0, 1))))]
    assert octahedral_sum(s, (0, 1), f, "both") == Fraction(brute_octahedral(s, (0, 1), f))


weights = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=6), min_size=9, max_size=9)


@given(st.integers(0, 500), weights)
@settings(max_examples=60, deadline=None)
def test_bipartite_octahedral_sum_nonnegative_and_exact(seed, w):
    s = at_q(random_bipartite(seed, 3), 3)
    assert len(s.boundary((0, 1))) == 9
    total = octahedral_sum(s, (0, 1), w, "both")
    assert total >= 0
    assert total == brute_octahedral(s, (0, 1), w)
