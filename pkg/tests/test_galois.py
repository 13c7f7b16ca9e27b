import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_blind.galois import (
    FieldError,
    canonical_modulus,
    chi,
    ff_trace,
    field_from_json,
    galois_ring,
    is_irreducible,
    make_field,
    ring_trace,
    teichmuller_lift,
)

FIELDS = [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2), (7, 1)]


def naive_mul(a, b, modulus, p):
    """Schoolbook product of coefficient lists (low degree first) reduced by a monic modulus."""
    m = len(modulus) - 1
    prod = [0] * (2 * m)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    for k in range(len(prod) - 1, m - 1, -1):
        c = prod[k]
        if c:
            for i in range(m + 1):
                prod[k - m + i] = (prod[k - m + i] - c * modulus[i]) % p
    return tuple(prod[:m])


@pytest.mark.parametrize("pm", FIELDS, ids=str)
def test_tables_match_schoolbook_arithmetic(pm):
    F = make_field(*pm)
    mod = canonical_modulus(*pm)
    for a, b in itertools.product(range(F.d), repeat=2):
        ca, cb = F.coeffs(a), F.coeffs(b)
        assert F.coeffs(int(F.add_table[a, b])) == tuple((x + y) % F.p for x, y in zip(ca, cb))
        assert F.coeffs(int(F.mul_table[a, b])) == naive_mul(ca, cb, mod, F.p)


def test_canonical_moduli():
    assert canonical_modulus(2, 2) == (1, 1, 1)
    # x^3 + x^2 + 1 beats x^3 + x + 1 when low-degree coefficients are compared first
    assert canonical_modulus(2, 3) == (1, 0, 1, 1)
    assert canonical_modulus(3, 2) == (1, 0, 1)


def test_gf4_multiplication_by_hand():
    F = make_field(2, 2)
    w = F.element((0, 1))
    assert w * w == w + 1
    assert w**3 == F.element(1)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_prime_field_is_integers_mod_p(p):
    F = make_field(p)
    for a, b in itertools.product(range(p), repeat=2):
        assert F.add_table[a, b] == (a + b) % p
        assert F.mul_table[a, b] == (a * b) % p


@pytest.mark.parametrize("pm", FIELDS, ids=str)
def test_trace_is_frobenius_sum(pm):
    F = make_field(*pm)
    for a in F.elements():
        s = F.element(0)
        y = a
        for _ in range(F.m):
            s = s + y
            y = y**F.p
        assert s == F.element(ff_trace(a, F))


def test_characters_are_roots_of_unity():
    F = make_field(3, 2)
    vals = np.array([chi(a, F) for a in F.elements()])
    assert np.allclose(vals**3, 1)
    assert abs(vals.sum()) < 1e-12


def test_irreducibility():
    assert is_irreducible((1, 1, 1), 2)
    assert not is_irreducible((1, 0, 1), 2)  # (x + 1)^2
    assert is_irreducible((1, 0, 1), 3)
    assert not is_irreducible((2, 0, 1), 3)  # x^2 - 1


def test_bad_fields_rejected():
    with pytest.raises(FieldError):
        make_field(4)
    with pytest.raises(FieldError):
        make_field(2, 2, (1, 0, 1))
    with pytest.raises((FieldError, ValueError)):
        make_field(2, 1, max_dimension=1)


def test_zero_has_no_inverse():
    F = make_field(5)
    with pytest.raises(FieldError):
        F.element(0).inverse()


def test_json_round_trip():
    F = make_field(2, 3)
    assert field_from_json(F.to_json()).d == 8
    assert np.array_equal(field_from_json(F.to_json()).mul_table, F.mul_table)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FIELDS), st.data())
def test_field_axioms_random(pm, data):
    F = make_field(*pm)
    idx = st.integers(0, F.d - 1)
    a, b, c = (F.element(data.draw(idx)) for _ in range(3))
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == F.element(0)
    if a:
        assert a * a.inverse() == F.element(1)


# -- Galois rings ------------------------------------------------------------------------


def test_teichmuller_in_z9():
    F = make_field(3)
    R = galois_ring(F, 2)
    lifts = [teichmuller_lift(a, R) for a in F.elements()]
    # {0} and the cube roots of unity in Z_9 reducing to 1, 2: 1 and 8
    assert [t[0] for t in lifts] == [0, 1, 8]


def test_teichmuller_in_z4_and_z8():
    F = make_field(2)
    assert [teichmuller_lift(a, galois_ring(F, 2))[0] for a in F.elements()] == [0, 1]
    assert [teichmuller_lift(a, galois_ring(F, 3))[0] for a in F.elements()] == [0, 1]


@pytest.mark.parametrize("pm,s", [((2, 2), 2), ((2, 3), 3), ((3, 2), 2), ((2, 2), 3)], ids=str)
def test_teichmuller_multiplicative_and_fixed(pm, s):
    F = make_field(*pm)
    R = galois_ring(F, s)
    lifts = [teichmuller_lift(a, R) for a in F.elements()]
    for a, b in itertools.product(range(F.d), repeat=2):
        assert R.mul(lifts[a], lifts[b]) == lifts[int(F.mul_table[a, b])]
    for a, t in enumerate(lifts):
        assert R.pow(t, F.d) == t
        assert R.reduce(t) == a


@pytest.mark.parametrize("pm,s", [((2, 2), 2), ((3, 2), 2), ((2, 3), 3)], ids=str)
def test_ring_trace_reduces_to_field_trace(pm, s):
    F = make_field(*pm)
    R = galois_ring(F, s)
    for t in R.elements():
        assert ring_trace(t, R) % F.p == F.trace_table[R.reduce(t)]
