import cmath
import math
import random

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cyclosgp._ntt import negacyclic_ntt
from cyclosgp.params import level
from cyclosgp.ring import (
    LevelMismatch,
    NotDivisible,
    RingElement,
    canonical_embed,
    divide_exact,
    field_norm,
    field_norm_numeric,
    from_linear_form,
    inverse_field,
    is_unit,
    linear_form,
    ring_add,
    ring_mul,
    ring_mul_ntt,
    ring_mul_schoolbook,
    schoolbook,
)
from cyclosgp.units import cyclotomic_unit


def elem(k, coeffs):
    return RingElement.from_coeffs(k, coeffs)


def rand_elem(k, bound, seed):
    rnd = random.Random(seed)
    return elem(k, [rnd.randint(-bound, bound) for _ in range(level(k).n)])


def ring_elems(k, bound=50):
    n = level(k).n
    return st.lists(st.integers(-bound, bound), min_size=n, max_size=n).map(lambda c: elem(k, c))


def sqrt2():
    return RingElement.from_exponents(3, [1, -1])


def reference_mul(a, b):
    """Plain convolution followed by x^n = -1, written independently of the package."""
    n = len(a)
    full = [0] * (2 * n)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            full[i + j] += x * y
    return [full[i] - full[i + n] for i in range(n)]


def test_add_examples():
    one = RingElement.one(3)
    assert ring_add(one, -one).is_zero()
    z = RingElement.zeta_power(3, 1)
    assert ring_add(z, z) == elem(3, [0, 2, 0, 0])


def test_add_matches_bigint_vector_addition():
    a, b = rand_elem(4, 10 ** 30, 1), rand_elem(4, 10 ** 30, 2)
    assert ring_add(a, b).coeffs == tuple(x + y for x, y in zip(a.coeffs, b.coeffs))


def test_mul_examples():
    z = RingElement.zeta_power(4, 1)
    assert ring_mul(RingElement.zeta_power(4, 7), z) == RingElement.constant(4, -1)
    assert ring_mul(sqrt2(), sqrt2()) == RingElement.constant(3, 2)


def test_level_mismatch():
    with pytest.raises(LevelMismatch):
        RingElement.one(3) + RingElement.one(4)


@pytest.mark.parametrize("k", [5, 6, 8, 10])
def test_ntt_equals_schoolbook(k):
    a, b = rand_elem(k, 2 ** 40, 10 + k), rand_elem(k, 2 ** 40, 20 + k)
    assert ring_mul_ntt(a, b) == ring_mul_schoolbook(a, b)
    assert list(ring_mul_schoolbook(a, b).coeffs) == reference_mul(list(a.coeffs), list(b.coeffs))


def test_large_coefficients_fall_back_exactly():
    a, b = rand_elem(6, 2 ** 400, 1), rand_elem(6, 2 ** 400, 2)
    assert list(ring_mul(a, b).coeffs) == reference_mul(list(a.coeffs), list(b.coeffs))


def test_ntt_overflow_raises():
    with pytest.raises(OverflowError):
        negacyclic_ntt([2 ** 30000] * 8, [2 ** 30000] * 8)


@settings(max_examples=40, deadline=None)
@given(ring_elems(5), ring_elems(5), ring_elems(5))
def test_ring_axioms(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


def test_schoolbook_wraps_negacyclically():
    # (1 + x)^2 = 1 + 2x + x^2 = 2x in Z[x]/(x^2 + 1)
    assert schoolbook([1, 1], [1, 1]) == [0, 2]


def test_embedding_examples():
    e = canonical_embed(RingElement.one(4), 64)
    assert all(abs(complex(v) - 1) < 1e-15 for v in e.values)
    e = canonical_embed(RingElement.zeta_power(3, 1), 64)
    assert complex(e.values[0]) == pytest.approx(cmath.exp(1j * math.pi / 4))
    assert complex(e.values[1]) == pytest.approx(cmath.exp(3j * math.pi / 4))
    e = canonical_embed(sqrt2(), 64)
    assert complex(e.values[0]) == pytest.approx(math.sqrt(2))
    assert complex(e.values[1]) == pytest.approx(-math.sqrt(2))


def test_embedding_matches_direct_complex_evaluation():
    g = rand_elem(5, 100, 3)
    emb = canonical_embed(g, 128)
    n, m = g.level.n, g.level.m
    for j, v in zip(g.level.J, emb.values):
        direct = sum(c * cmath.exp(2j * math.pi * i * j / m) for i, c in enumerate(g.coeffs))
        assert abs(complex(v) - direct) < 1e-9


def test_embedding_precision_floor():
    with pytest.raises(ValueError):
        canonical_embed(RingElement.one(3), 32)


def test_norm_examples():
    assert field_norm(RingElement.one(5)) == 1
    assert field_norm(sqrt2()) == 4
    assert field_norm(RingElement.constant(3, 2)) == 16


@pytest.mark.parametrize("k", [3, 4, 5])
def test_norm_matches_sympy_resultant(k):
    x = sympy.symbols("x")
    n = level(k).n
    for seed in range(5):
        g = rand_elem(k, 20, seed)
        poly = sum(c * x ** i for i, c in enumerate(g.coeffs))
        res = sympy.resultant(x ** n + 1, poly, x)
        assert field_norm(g) == int(res)


@settings(max_examples=30, deadline=None)
@given(ring_elems(4, 20), ring_elems(4, 20))
def test_norm_multiplicative(a, b):
    assert field_norm(a * b) == field_norm(a) * field_norm(b)


def test_norm_numeric_agrees():
    g = rand_elem(6, 1000, 5)
    assert field_norm_numeric(g) == field_norm(g)


def test_is_unit_examples():
    assert is_unit(RingElement.one(3))
    assert is_unit(RingElement.zeta_power(5, 3))
    assert not is_unit(sqrt2())


def test_divide_examples():
    g = rand_elem(4, 30, 7)
    assert divide_exact(g * 2, RingElement.constant(4, 2)) == g
    eps = cyclotomic_unit(5, 4) ** 3
    assert divide_exact(g * eps, eps) == g
    with pytest.raises(NotDivisible):
        divide_exact(RingElement.one(3), sqrt2())
    with pytest.raises(ZeroDivisionError):
        divide_exact(g, RingElement.zero(4))


@settings(max_examples=40, deadline=None)
@given(ring_elems(5, 30), ring_elems(5, 30))
def test_divide_inverts_multiplication(a, b):
    if b.is_zero():
        return
    assert divide_exact(a * b, b) == a


def test_inverse_field():
    h = rand_elem(4, 9, 11)
    num, den = inverse_field(h)
    assert den > 0
    assert h * num == RingElement.constant(4, den)


@given(ring_elems(6, 1000))
def test_linear_form_roundtrip(g):
    a, b = linear_form(g)
    assert from_linear_form(6, a, b) == g


def test_galois_and_conjugate():
    g = rand_elem(4, 9, 12)
    emb = canonical_embed(g, 64).values
    conj = canonical_embed(g.conjugate(), 64).values
    for v, w in zip(emb, conj):
        assert complex(w) == pytest.approx(complex(v).conjugate())
    assert g.galois(1) == g
    assert field_norm(g.galois(3)) == field_norm(g)
