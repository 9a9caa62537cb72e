import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load
from oracle import brute_omega, random_bipartite
from drl.gf import FieldError, GuardError
from drl.lang import parse_system
from drl.specializer import SpecializationError, SpecializedSystem, at_q, enumerate_system, specialize_poly
from drl.lang import parse_poly


def test_tower_counts(tower):
    sys = enumerate_system(tower, 7)
    assert sys.counts() == {"{}": 1, "{0}": 7, "{1}": 7, "{0,1}": 49}
    assert sys.omega((0, 1)).coords == ("x0", "x1", "z", "t")


def test_tower_matches_oracle_at_q5(tower):
    s5 = at_q(tower, 5)
    coords, pts = brute_omega(s5.spec, (0, 1), 5)
    assert set(s5.omega((0, 1)).tuples()) == pts
    assert len(pts) == 25


def test_sigma_shift_specializes_to_q_power():
    sp = specialize_poly(parse_poly("s^2(w) - w", 3), 3)
    assert dict(sp.terms) == {(("w", 9),): 1, (("w", 1),): 2}


def test_dynamics_sort_points():
    spec = load("dynamics")
    assert at_q(spec, 7).omega((0,)).tuples() == [(0,), (1,)]
    # x^7 = x^2 inside F_{7^4}: 0 plus the solutions of x^5 = 1
    assert len(at_q(spec, 7, 4).omega((0,))) == 6


def test_twisted_sort_lives_in_extension():
    spec = load("twisted_sort")
    assert at_q(spec, 7).omega((0,)).tuples() == [(0,)]
    assert len(at_q(spec, 7, 2).omega((0,))) == 7


def test_sqrt_cover_counts():
    s = at_q(load("sqrt_cover"), 7)
    assert len(s.omega((1,))) == 7
    assert len(s.boundary((1,))) == 7
    assert s.omega((1,)).coords == ("x1", "w")


def test_q_must_be_power_of_characteristic(tower):
    with pytest.raises(FieldError):
        SpecializedSystem(tower, 11)
    assert at_q(tower, 11).spec.p == 11
    assert at_q(tower, 121).spec.p == 11


def test_point_guard(monkeypatch, tower):
    monkeypatch.setenv("DRL_GUARD_POINTS", "10")
    with pytest.raises(GuardError):
        at_q(tower, 7).omega((0, 1))


def test_degenerate_resolving_equation_is_reported():
    spec = parse_system("system d\nchar 5\nvertices 0 1\nsort 0: eqs s(x0) - x0\nsort 1: eqs s(x1) - x1\n"
                        "cover {0,1}: vars w; eqs x0*w - x1, s(w) - w")
    with pytest.raises(SpecializationError, match="x0"):
        at_q(spec, 5).omega((0, 1))


def test_workers_do_not_change_points(tower):
    a = at_q(tower, 13, workers=1).omega((0, 1))
    b = at_q(tower, 13, workers=4).omega((0, 1))
    assert a == b
    assert np.all(np.diff(a.data[:, 0]) >= 0)


@given(st.integers(0, 10**6), st.sampled_from([3, 5]))
@settings(max_examples=25, deadline=None)
def test_random_bipartite_matches_oracle(seed, p):
    spec = random_bipartite(seed, p)
    sys = at_q(spec, p)
    for u in spec.closure():
        if u:
            coords, pts = brute_omega(spec, u, p)
            assert sys.omega(u).coords == coords
            assert set(sys.omega(u).tuples()) == pts
