from __future__ import annotations

import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from asymptheta import expansion
from asymptheta.distributions import RDist, Window, theta_pair_poly
from asymptheta.expansion import (ExpansionError, declared_exponent, em_coefficient, euler_maclaurin_1d, expand,
                                  expand_affine_exact, leading_term, series_transform)
from asymptheta.piecewise import PiecewiseQP, pqp_polarize
from asymptheta.polyhedra import Polyhedron, triangulate_cone
from asymptheta.quasipoly import QuasiPolynomial
from asymptheta.scalars import Cyclotomic, Periodic, Poly, ceil_fraction
from generators import rand_finite_m, rand_poly

seeds = st.integers(0, 10**6)
UNIT = Polyhedron.interval(0, 1)
LINE = Polyhedron.whole_space(1)
HALF = Polyhedron([((1,), 0)])
ZERO = Polyhedron.point((0,))
M1 = PiecewiseQP.indicator(UNIT)
M3 = PiecewiseQP.indicator(UNIT, q=QuasiPolynomial.lam(1, 0) + 1)
X = Poly.var(1, 0)


def rd(dim, terms):
    return RDist(dim, {key: Periodic.const(c) if not isinstance(c, Periodic) else c for key, c in terms.items()})


def same(a: RDist, b: RDist) -> bool:
    return (a - b).is_structurally_zero()


# ---------------------------------------------------------------------- 1-D Euler-Maclaurin


def test_euler_maclaurin_untwisted_half_line():
    a = euler_maclaurin_1d(0, 0, 0, 2)
    assert same(a.coefficient(0), rd(1, {(HALF, (0,), (0,)): 1}))
    assert same(a.coefficient(1), rd(1, {(ZERO, (0,), (0,)): F(1, 2)}))
    assert same(a.coefficient(2), rd(1, {(ZERO, (1,), (0,)): F(1, 12)}))


def test_euler_maclaurin_alternating_has_no_leading_term():
    a = euler_maclaurin_1d(0, 0, F(1, 2), 2)
    assert a.coefficient(0).is_structurally_zero()
    # Abel sum of (-1)^j over j >= 0
    assert same(a.coefficient(1), rd(1, {(ZERO, (0,), (0,)): F(1, 2)}))
    # an endpoint at 1/2 makes the phase (-1)^ceil(k/2) genuinely k-periodic
    c = em_coefficient(1, F(1, 2), F(0), F(1, 2))
    assert c.period == 4 and not c.is_constant()


def test_full_line_examples():
    assert expand_affine_exact(LINE, (0,), QuasiPolynomial.const(1), 3).equals(
        expansion.AsymptoticSeries(1, 1, 3, {1: {(LINE, (0,), (0,)): 1}}))
    assert expand_affine_exact(LINE, (0,), QuasiPolynomial.char(1, (F(1, 2),)), 3).is_structurally_zero()


def test_negative_order_rejected():
    with pytest.raises(ExpansionError):
        euler_maclaurin_1d(0, 0, 0, -1)
    with pytest.raises(ExpansionError):
        expand(M1, -1)


@given(st.fractions(-2, 2, max_denominator=4), st.fractions(0, 2, max_denominator=4),
       st.fractions(-1, 1, max_denominator=3), st.sampled_from([0, F(1, 2), F(1, 3), F(3, 4)]),
       st.integers(1, 9), st.integers(0, 3))
def test_euler_maclaurin_interval_difference_is_exact(s, length, sigma, u, k, deg):
    # sum over ks + sigma <= j < kt + sigma equals EM(s) - EM(t) paired on a window covering [s, t]
    t = s + length
    order = deg + 2
    diff = euler_maclaurin_1d(s, sigma, u, order) - euler_maclaurin_1d(t, sigma, u, order)
    phi = X ** deg
    window = Window.closed((s - 1,), (t + 1,))
    zeta = Cyclotomic.exp2pi(u)
    direct = F(0)
    for j in range(ceil_fraction(k * s + sigma), ceil_fraction(k * t + sigma)):
        direct = direct + zeta ** j * phi.evaluate((F(j, k),))
    assert diff.pair(k, phi, window) == direct


# ---------------------------------------------------------------------- affine subspaces


def test_affine_axis_with_alternating_transverse_character():
    axis = Polyhedron([((0, 1), 0), ((0, -1), 0)])
    q = QuasiPolynomial.char(2, (0, F(1, 2)))
    got = expand_affine_exact(axis, (0, 0), q, 2)
    assert got.s == 1
    assert same(got.coefficient(0), rd(2, {(axis, (0, 0), (0, 0)): 1}))
    assert all(got.coefficient(n).is_structurally_zero() for n in (1, 2))


def test_affine_rejects_non_subspace():
    with pytest.raises(ExpansionError):
        expand_affine_exact(UNIT, (0,), QuasiPolynomial.const(1))


# ---------------------------------------------------------------------- master expansion


def test_expand_interval_matches_bernoulli_display():
    from asymptheta.bernoulli import bernoulli_number

    a = expand(M1, 3)
    one, zero = Polyhedron.point((1,)), ZERO
    assert same(a.coefficient(0), rd(1, {(UNIT, (0,), (0,)): 1}))
    assert same(a.coefficient(1), rd(1, {(zero, (0,), (0,)): F(1, 2), (one, (0,), (0,)): F(1, 2)}))
    for n in (2, 3):
        c = bernoulli_number(n) / math.factorial(n) * (-1) ** (n - 1)
        want = rd(1, {(one, (n - 1,), (0,)): c, (zero, (n - 1,), (0,)): -c})
        assert same(a.coefficient(n), want)


def test_expand_weighted_interval_leading_terms():
    a = expand(M3, 1)
    one = Polyhedron.point((1,))
    assert a.s == 2
    assert same(a.coefficient(0), rd(1, {(UNIT, (0,), (1,)): 1}))
    assert same(a.coefficient(1), rd(1, {(UNIT, (0,), (0,)): 1, (one, (0,), (0,)): F(1, 2)}))


def test_expand_simplex_leading_terms():
    tri = Polyhedron.simplex([(0, 0), (1, 0), (0, 1)])
    a = expand(PiecewiseQP.indicator(tri), 1)
    assert same(a.coefficient(0), rd(2, {(tri, (0, 0), (0, 0)): 1}))
    edges = [f.polyhedron for f in tri.faces if f.dim == 1]
    assert same(a.coefficient(1), rd(2, {(e, (0, 0), (0, 0)): F(1, 2) for e in edges}))


def test_leading_term_examples():
    s, theta = leading_term(M3)
    assert s == 2 and same(theta, rd(1, {(UNIT, (0,), (1,)): 1}))
    tri = Polyhedron.simplex([(0, 0), (1, 0), (0, 1)])
    s, theta = leading_term(PiecewiseQP.indicator(tri))
    assert s == 2 and same(theta, rd(2, {(tri, (0, 0), (0, 0)): 1}))
    s, theta = leading_term(PiecewiseQP.indicator(LINE, q=QuasiPolynomial.char(1, (F(1, 2),))))
    assert s is None and theta.is_structurally_zero()


def test_leading_term_skips_vanishing_order():
    # (-1)^lambda on [0, 1]: the k^1 term vanishes, the first term is O(1)
    m = PiecewiseQP.indicator(UNIT, q=QuasiPolynomial.char(1, (F(1, 2),)))
    s, theta = leading_term(m)
    assert s == 0 and not theta.is_structurally_zero()


# ---------------------------------------------------------------------- decomposition independence


def _reversed_triangulation(gens):
    n = len(gens)
    return [(sign, tuple(sorted(n - 1 - i for i in cell))) for sign, cell in triangulate_cone(list(reversed(gens)))]


def test_expansion_independent_of_triangulation(monkeypatch):
    # the apex cone of a square pyramid has four rays, so the two pulling orders differ
    pyramid = Polyhedron.from_generators([(0, 0, 0), (2, 0, 0), (0, 2, 0), (2, 2, 0), (1, 1, 1)])
    m = PiecewiseQP.indicator(pyramid)
    apex_rays = sorted(pyramid.tangent_cone((1, 1, 1)).rays)
    assert triangulate_cone(apex_rays) != _reversed_triangulation(apex_rays)
    a = expand(m, 3)
    monkeypatch.setattr(expansion, "triangulate_cone", _reversed_triangulation)
    b = expand(m, 3)
    assert a.equals(b)
    phi = Poly.var(3, 2) * Poly.var(3, 0) + 1
    for k in (1, 2, 3):
        assert a.pair(k, phi) == b.pair(k, phi) == theta_pair_poly(m, k, phi)


@settings(max_examples=15)
@given(seeds)
def test_expansion_independent_of_polarization(seed):
    m = rand_finite_m(random.Random(seed), 1)
    pm, _ = pqp_polarize(m)
    assert expand(m, 3).equals(expand(pm, 3))


@settings(max_examples=15)
@given(seeds, st.tuples(st.integers(-3, 3), st.integers(-3, 3)))
def test_expansion_commutes_with_lattice_translation(seed, lam0):
    m = rand_finite_m(random.Random(seed), 2)
    n = 3
    moved = series_transform(expand(m.translate(lam0), n), translate=[-x for x in lam0])
    assert moved.equals(expand(m, n))


@settings(max_examples=15)
@given(seeds, st.sampled_from([(1,), (-1,), (2,)]), st.sampled_from([0, F(1, 2), F(1, 3)]))
def test_finite_difference_intertwining(seed, eta, u):
    m = rand_finite_m(random.Random(seed), 1)
    n = 4
    lhs = expand(m.difference(eta, u), n)
    a = expand(m, n)
    rhs = a - a.translate(eta).scale(QuasiPolynomial.const(1, Cyclotomic.exp2pi(u)))
    assert lhs.equals(rhs)


@settings(max_examples=8)
@given(seeds)
def test_declared_exponent_bounds_leading_term(seed):
    m = rand_finite_m(random.Random(seed), 2)
    s, _ = leading_term(m)
    assert s is None or s <= declared_exponent(m)


@settings(max_examples=10)
@given(seeds)
def test_exactness_on_polynomials_in_two_dimensions(seed):
    rng = random.Random(seed)
    m = rand_finite_m(rng, 2, degree=0)
    phi = rand_poly(rng, 2, 2)
    series = expand(m, declared_exponent(m) + 2)
    for k in (1, 2, 3, 5):
        assert series.pair(k, phi) == theta_pair_poly(m, k, phi)
