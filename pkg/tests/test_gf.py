import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drl.gf import (FieldElement, FieldError, canonical_modulus, frobenius, is_prime, make_field,
                    poly_roots, prime_power)

SMALL_FIELDS = [(2, 1), (3, 2), (5, 1), (7, 2), (2, 4), (3, 3)]


def test_prime_power_recognition():
    assert prime_power(49) == (7, 2)
    assert prime_power(7) == (7, 1)
    assert prime_power(12) is None
    assert prime_power(1) is None
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]


def test_canonical_modulus_is_lexicographically_first():
    assert canonical_modulus(3, 2) == (1, 0, 1)   # X^2 + 1
    assert canonical_modulus(2, 2) == (1, 1, 1)   # X^2 + X + 1
    with pytest.raises(FieldError):
        make_field(4, 1)


def test_encoding_puts_constant_term_first():
    ctx = make_field(7, 2)
    assert ctx.embed(3) == 21
    assert ctx.to_vec(ctx.embed(3)) == (3, 0)
    assert ctx.from_vec((1, 1)) == 8


def test_square_roots_in_prime_field():
    ctx = make_field(7, 1)
    assert [int(r) for r in poly_roots([-2, 0, 1], ctx)] == [3, 4]
    assert poly_roots([-3, 0, 1], ctx) == []


def test_frobenius_fixed_points_form_subfield():
    ctx = make_field(7, 2)
    fixed = [a for a in range(ctx.order) if frobenius(FieldElement(ctx, a), ctx, 7).code == a]
    assert len(fixed) == 7
    assert sorted(fixed) == sorted(ctx.embed(c) for c in range(7))


@pytest.mark.parametrize("p,n", SMALL_FIELDS)
def test_multiplicative_group_is_cyclic_of_full_order(p, n):
    ctx = make_field(p, n)
    Q = ctx.order
    logs = ctx.vlog(np.arange(1, Q))
    assert sorted(logs.tolist()) == list(range(Q - 1))


@pytest.mark.parametrize("p,n", SMALL_FIELDS)
def test_vectorized_ops_match_scalar(p, n):
    ctx = make_field(p, n)
    a = ctx.all_elements()
    b = (a * 5 + 3) % ctx.order
    assert ctx.vmul(a, b).tolist() == [ctx.mul(int(x), int(y)) for x, y in zip(a, b)]
    assert ctx.vadd(a, b).tolist() == [ctx.add(int(x), int(y)) for x, y in zip(a, b)]
    assert ctx.vpow(a, 5).tolist() == [ctx.pow(int(x), 5) for x in a]


field_and_elems = st.sampled_from(SMALL_FIELDS).flatmap(
    lambda pn: st.tuples(st.just(make_field(*pn)),
                         *[st.integers(0, pn[0] ** pn[1] - 1) for _ in range(3)]))


@given(field_and_elems)
@settings(max_examples=200, deadline=None)
def test_field_axioms(args):
    ctx, a, b, c = args
    A, B, C = (FieldElement(ctx, x) for x in (a, b, c))
    assert (A + B) * C == A * C + B * C
    assert (A * B) * C == A * (B * C)
    assert A - A == ctx.element(0)
    if a:
        assert A * A.inverse() == ctx.element(1)
    # Frobenius is additive
    p = ctx.p
    assert (A + B) ** p == A ** p + B ** p


@given(st.integers(0, 48), st.integers(0, 2400))
def test_fermat_in_f49(a, e):
    ctx = make_field(7, 2)
    assert ctx.pow(a, e + 48) == ctx.pow(a, e) or a == 0
