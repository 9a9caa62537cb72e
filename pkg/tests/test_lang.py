import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, load
from drl.lang import (DiffPolynomial, DvsError, parse_poly, parse_refinement, parse_system, print_refinement,
                      print_system, rebind_char, validate)

TOWER_TEXT = (CORPUS / "tower.dvs").read_text()


def codes(text):
    with pytest.raises(DvsError) as e:
        parse_system(text)
    return [d.code for d in e.value.diagnostics]


def test_tower_structure(tower):
    assert tower.name == "tower"
    assert tower.p == 7
    assert tower.vertices == (0, 1)
    assert [b.subset for b in tower.blocks] == [(0,), (1,), (0, 1)]
    assert tower.block((0, 1)).vars == ("z", "t")
    assert tower.closure() == [(), (0,), (1,), (0, 1)]


@pytest.mark.parametrize("path", sorted(p.name for p in CORPUS.glob("*.dvs") if "refine" not in p.name
                                        and p.name != "bad_scope.dvs"))
def test_print_parse_roundtrip_on_corpus(path):
    spec = parse_system((CORPUS / path).read_text())
    text = print_system(spec)
    assert parse_system(text) == spec
    assert print_system(parse_system(text)) == text
    assert validate(spec) == []


def test_polynomial_printing():
    assert str(parse_poly("s(x0) - x0", 7)) == "s(x0) - x0"
    assert str(parse_poly("t^2 - (x0 + z)", 7)) == "t^2 - x0 - z"
    assert str(parse_poly("(x0 + 1)^2", 5)) == "x0^2 + 2*x0 + 1"


def test_sigma_power_syntax():
    p = parse_poly("s^2(w) - w", 3)
    assert ((("w", 2, 1),), 1) in p.terms


def test_coefficients_reduce_to_symmetric_residues():
    assert parse_poly("8*x0", 7) == parse_poly("x0", 7)
    assert parse_poly("6*x0", 7) == parse_poly("-x0", 7)
    assert parse_poly("7*x0 + 1", 7) == DiffPolynomial.const(7, 1)


def test_scope_violation_is_located():
    with pytest.raises(DvsError) as e:
        parse_system((CORPUS / "bad_scope.dvs").read_text())
    (d,) = e.value.diagnostics
    assert d.code == "SCOPE_VIOLATION" and "x2" in d.message
    assert d.line == 7


def test_diagnostics():
    assert codes("system a\nchar 7\nvertices 0\nsort 0: eqs s(x0) - $") == ["LEX_ERROR"]
    assert codes("system a\nchar 6\nvertices 0\nsort 0: eqs x0") == ["BAD_CHAR"]
    assert codes("char 7\nvertices 0\nsort 0: eqs x0") == ["MISSING_HEADER"]
    assert "MISSING_SINGLETON" in codes("system a\nchar 7\nvertices 0 1\nsort 0: eqs s(x0) - x0\n"
                                       "cover {0,1}: eqs x0 - x1")
    assert "UNKNOWN_VERTEX" in codes("system a\nchar 7\nvertices 0\nsort 0: eqs x0\nsort 3: eqs x3")
    assert "DUPLICATE_BLOCK" in codes("system a\nchar 7\nvertices 0\nsort 0: eqs x0\nsort 0: eqs x0")
    assert "SYNTAX_ERROR" in codes("system a\nchar 7\nvertices 0\nsort 0: eqs x0 +")


def test_refinement_roundtrip():
    ref = parse_refinement((CORPUS / "tower_refine.dvs").read_text(), 7)
    text = print_refinement(ref, 7)
    assert text == "char 7\nrefine {1}: vars z; eqs z^2 - x1, s(z) - z\n"
    assert parse_refinement(text) == ref


def test_rebind_keeps_small_coefficients(tower):
    s11 = rebind_char(tower, 11)
    assert s11.p == 11
    assert print_system(s11).replace("char 11", "char 7") == print_system(tower)


NAMES = ["x0", "x1", "w", "t"]
monomials = st.lists(st.tuples(st.sampled_from(NAMES), st.integers(0, 2), st.integers(1, 3)), max_size=3)


@st.composite
def polys(draw, p=7):
    d = {}
    for _ in range(draw(st.integers(0, 4))):
        mono = {}
        for v, k, e in draw(monomials):
            mono[(v, k)] = mono.get((v, k), 0) + e
        key = tuple(sorted((v, k, e) for (v, k), e in mono.items()))
        d[key] = d.get(key, 0) + draw(st.integers(-10, 10))
    return DiffPolynomial.from_dict(p, d)


@given(polys())
@settings(max_examples=200, deadline=None)
def test_poly_print_parse_roundtrip(poly):
    assert parse_poly(str(poly), 7) == poly


@given(polys(), polys(), polys())
@settings(max_examples=100, deadline=None)
def test_poly_ring_laws(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a - a == DiffPolynomial.const(7, 0)
    assert a * b == b * a
