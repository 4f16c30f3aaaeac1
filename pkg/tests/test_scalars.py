from __future__ import annotations

import cmath
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from asymptheta.scalars import (Cyclotomic, Periodic, Poly, ScalarError, cyclotomic_normalize, cyclotomic_polynomial,
                                lcm_all, multinomial_power, periodic_from_function, poly_directional_derivative,
                                root_of_unity_power, scalar_from_json, scalar_to_json, to_fraction)

small = st.fractions(min_value=-5, max_value=5, max_denominator=6)
levels = st.sampled_from([1, 2, 3, 4, 5, 6, 8, 12])


@st.composite
def cyclotomics(draw, level=None):
    n = draw(levels) if level is None else level
    return Cyclotomic(n, draw(st.lists(small, min_size=n, max_size=n)))


def close(a: Cyclotomic, z: complex) -> bool:
    return abs(a.to_complex() - z) < 1e-9


# ---------------------------------------------------------------------- rationals


def test_to_fraction_parses_p_over_q():
    assert to_fraction("3/4") == F(3, 4)
    assert to_fraction(" -2 ") == -2
    assert to_fraction(7) == 7


@pytest.mark.parametrize("bad", ["1/0", "a/2", "1.5", "", True])
def test_to_fraction_rejects_malformed(bad):
    with pytest.raises(ScalarError):
        to_fraction(bad)


def test_lcm_all():
    assert lcm_all([4, 6, 10]) == 60
    assert lcm_all([]) == 1


# ---------------------------------------------------------------------- cyclotomics


def test_cyclotomic_polynomials():
    assert cyclotomic_polynomial(1) == (-1, 1)
    assert cyclotomic_polynomial(4) == (1, 0, 1)
    assert cyclotomic_polynomial(6) == (1, -1, 1)
    assert cyclotomic_polynomial(12) == (1, 0, -1, 0, 1)


def test_normalize_examples():
    # x^3 + x^2 mod x^2 + 1 = -x - 1
    assert cyclotomic_normalize([0, 0, 1, 1], 4) == Cyclotomic(4, [-1, -1])
    assert cyclotomic_normalize([5], 1) == 5
    # x^2 mod x^2 - x + 1 = x - 1
    assert cyclotomic_normalize([0, 0, 1], 6) == Cyclotomic(6, [-1, 1])


@pytest.mark.parametrize("n,e,want", [(2, 3, -1), (3, 3, 1), (4, 2, -1)])
def test_root_of_unity_power(n, e, want):
    assert root_of_unity_power(n, e) == want


def test_root_of_unity_power_needs_integral_exponent():
    with pytest.raises(ScalarError):
        root_of_unity_power(4, F(1, 2))


def test_roots_multiply_across_levels():
    assert Cyclotomic.root(3, 1) * Cyclotomic.root(4, 1) == Cyclotomic.root(12, 7)
    assert Cyclotomic.root(12, 1) ** 6 == -1
    assert Cyclotomic.root(6, 2) == Cyclotomic.root(3, 1)
    assert hash(Cyclotomic.root(6, 2)) == hash(Cyclotomic.root(3, 1))
    assert Cyclotomic.exp2pi(F(1, 2)) == -1


def test_rational_collapse_and_hash():
    i = Cyclotomic.root(4, 1)
    assert (i * i).level == 1
    assert i * i == F(-1)
    assert hash(Cyclotomic.rational(F(2, 3))) == hash(F(2, 3))
    z3 = Cyclotomic.root(3)
    s = 1 + z3 + z3 * z3
    assert s == 0 and not s
    assert (z3 + z3.conjugate()).is_rational()
    assert (z3 + z3.conjugate()).to_fraction() == -1


def test_format_and_json_roundtrip():
    a = Cyclotomic(4, [F(1, 2), -1])
    assert str(a) == "(1/2 - z4)"
    assert scalar_from_json(scalar_to_json(a)) == a
    assert scalar_to_json(F(3, 5)) == "3/5"


@given(st.integers(min_value=1, max_value=24))
def test_root_power_is_one(n):
    assert Cyclotomic.root(n) ** n == 1


@given(cyclotomics(), cyclotomics(), cyclotomics())
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a - a) == 0
    assert close(a * b, a.to_complex() * b.to_complex())
    assert close(a + b, a.to_complex() + b.to_complex())


@given(cyclotomics())
def test_inverse(a):
    if not a:
        with pytest.raises(ZeroDivisionError):
            a.inverse()
        return
    assert a * a.inverse() == 1
    assert close(a.inverse(), 1 / a.to_complex())


@given(st.sampled_from([(2, 4), (3, 6), (4, 12), (3, 12), (6, 12)]), st.data())
def test_lift_preserves_arithmetic(levels_pair, data):
    n, m = levels_pair
    a = data.draw(cyclotomics(level=n))
    b = data.draw(cyclotomics(level=n))
    lifted = Cyclotomic(m, a.lift(m), _reduced=True) * Cyclotomic(m, b.lift(m), _reduced=True)
    assert lifted == a * b
    assert Cyclotomic(m, (a * b).lift(m), _reduced=True) == lifted


@given(cyclotomics())
def test_conjugate_matches_complex(a):
    assert close(a.conjugate(), a.to_complex().conjugate())


def test_to_complex_root():
    assert abs(Cyclotomic.root(8, 3).to_complex() - cmath.exp(2j * cmath.pi * 3 / 8)) < 1e-12


# ---------------------------------------------------------------------- periodic


def test_periodic_minimal_period_and_arithmetic():
    p = Periodic([1, 2, 1, 2])
    assert p.period == 2 and p.at(5) == 2
    q = Periodic([0, 1, 2])
    r = p + q
    assert r.period == 6
    assert [r.at(k) for k in range(6)] == [p.at(k) + q.at(k) for k in range(6)]
    assert Periodic([3, 3]) == 3 and Periodic.const(3).is_constant()
    assert not Periodic([0, 0])
    assert periodic_from_function(lambda k: k % 2, 4) == Periodic([0, 1])
    assert str(Periodic([1, -1])) == "[1, -1]_(k mod 2)"


@given(st.lists(small, min_size=1, max_size=6), st.lists(small, min_size=1, max_size=6))
def test_periodic_product_pointwise(u, v):
    a, b = Periodic(u), Periodic(v)
    prod = a * b
    for k in range(lcm_all([len(u), len(v)]) * 2):
        assert prod.at(k) == u[k % len(u)] * v[k % len(v)]


# ---------------------------------------------------------------------- polynomials


def test_directional_derivative_examples():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    assert poly_directional_derivative(x * x * y, (1, 0)) == 2 * x * y
    assert poly_directional_derivative(x * y, (1, 1)) == x + y
    assert poly_directional_derivative(Poly.const(2, 5), (3, F(1, 2))).is_zero()


@st.composite
def polys(draw, n=2):
    terms = draw(st.dictionaries(st.tuples(*[st.integers(0, 3)] * n), small, max_size=5))
    return Poly(n, terms)


@given(polys(), polys(), st.tuples(small, small), st.tuples(small, small), small)
def test_directional_derivative_bilinear(p, q, u, v, c):
    d = poly_directional_derivative
    assert d(p + q * c, u) == d(p, u) + d(q, u) * c
    w = tuple(a + c * b for a, b in zip(u, v))
    assert d(p, w) == d(p, u) + d(p, v) * c


@given(polys(), polys(), st.tuples(small, small))
def test_poly_ring_evaluation(p, q, pt):
    assert (p * q).evaluate(pt) == p.evaluate(pt) * q.evaluate(pt)
    assert (p + q).evaluate(pt) == p.evaluate(pt) + q.evaluate(pt)


def test_poly_compose_and_degree():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    p = x * x + y
    comp = p.compose([x + y, x - y])
    assert comp == (x + y) * (x + y) + x - y
    assert p.total_degree() == 2 and p.degree_in([1]) == 1
    assert p.partial((1, 0)) == 2 * x
    assert p.format(["a", "b"]) in ("a^2 + b", "b + a^2")


def test_multinomial_power():
    got = multinomial_power([1, 2], 2)
    assert got == {(2, 0): 1, (1, 1): 4, (0, 2): 4}
