from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from asymptheta.distributions import (AsymptoticSeries, DistributionError, RDist, Window, theta_pair_poly,
                                      theta_sample)
from asymptheta.expansion import declared_exponent, expand
from asymptheta.piecewise import PiecewiseQP
from asymptheta.polyhedra import Polyhedron
from asymptheta.quasipoly import QuasiPolynomial
from asymptheta.scalars import Periodic, Poly
from generators import rand_finite_m, rand_poly

seeds = st.integers(0, 10**6)
UNIT = Polyhedron.interval(0, 1)
M1 = PiecewiseQP.indicator(UNIT)
M2 = M1.translate((2,))
M3 = PiecewiseQP.indicator(UNIT, q=QuasiPolynomial.lam(1, 0) + 1)
X = Poly.var(1, 0)
ONE = Poly.const(1, 1)


def point(x):
    return Polyhedron.point((x,))


def key(face, alpha=0, beta=0):
    return (face, (alpha,), (beta,))


def rd(terms):
    return RDist(1, {k: Periodic.const(c) for k, c in terms.items()})


# ---------------------------------------------------------------------- windows and samples


def test_window_parse_and_flags():
    w = Window.parse("[-1,2]x(0,1/2]")
    assert w.lo == (-1, 0) and w.hi == (2, F(1, 2))
    assert w.contains((2, F(1, 2))) and not w.contains((0, 0))
    assert w.format() == "[-1,2]x(0,1/2]"
    with pytest.raises(DistributionError):
        Window.parse("[0,1")


def test_theta_sample_examples():
    w = Window.parse("[-1,2]")
    s = theta_sample(M1, 3, w)
    assert s.atoms == [((F(i, 3),), 1) for i in range(4)]
    s = theta_sample(M2, 3, w)
    assert s.atoms == [((F(i, 3),), 1) for i in range(2, 6)]
    assert theta_sample(PiecewiseQP(1), 3, w).atoms == []


def test_theta_sample_open_sides():
    s = theta_sample(M1, 4, Window.parse("(0,1)"))
    assert [x for (x,), _ in s.atoms] == [F(1, 4), F(1, 2), F(3, 4)]


def test_theta_sample_csv():
    csv = theta_sample(M1, 2, Window.parse("[0,1]")).to_csv()
    assert csv == "x,weight\n0,1\n1/2,1\n1,1\n"


def test_theta_pairing_examples():
    for k in range(1, 12):
        assert theta_pair_poly(M1, k, X) == F(k + 1, 2)
        assert theta_pair_poly(M1, k, ONE) == k + 1
        assert theta_pair_poly(M1, k, X * X) == F(k, 3) + F(1, 2) + F(1, 6 * k)


def test_global_pairing_needs_bounded_support():
    half = PiecewiseQP.indicator(Polyhedron([((1,), 0)]))
    with pytest.raises(DistributionError, match="window"):
        theta_pair_poly(half, 2, ONE)
    assert theta_pair_poly(half, 2, ONE, Window.parse("[0,1]")) == 3


@given(seeds, st.integers(1, 6))
def test_windowed_pairing_matches_direct_sum(seed, k):
    rng = random.Random(seed)
    m = rand_finite_m(rng, 2)
    phi = rand_poly(rng, 2, 2)
    w = Window.parse("[-1,1]x(-1/2,3/2]")
    direct = 0
    for a in range(-k, k + 1):
        for b in range(-k, 2 * k + 1):
            x = (F(a, k), F(b, k))
            if w.contains(x):
                direct = direct + m.evaluate(k, (a, b)) * phi.evaluate(x)
    assert theta_pair_poly(m, k, phi, w) == direct


# ---------------------------------------------------------------------- R-distributions


def test_rdist_pairing_examples():
    half_points = rd({key(point(0)): F(1, 2), key(point(1)): F(1, 2)})
    assert half_points.pair(1, X * X) == F(1, 2)
    assert rd({key(UNIT): 1}).pair(1, X) == F(1, 2)
    assert rd({key(point(1), alpha=1): 1}).pair(1, X * X) == -2


def test_rdist_density_and_periodic_coefficients():
    # x mu_[0,1] paired with x gives 1/3; coefficient alternates with k
    psi = RDist(1, {key(UNIT, beta=1): Periodic([1, -1])})
    assert psi.pair(2, X) == F(1, 3) and psi.pair(3, X) == F(-1, 3)


def test_rdist_unbounded_face_needs_window():
    psi = rd({key(Polyhedron([((1,), 0)])): 1})
    with pytest.raises(DistributionError):
        psi.pair(1, ONE)
    assert psi.pair(1, X, Window.parse("[-1,2]")) == 2


@given(seeds, st.integers(1, 5))
def test_rdist_pairing_bilinear(seed, k):
    rng = random.Random(seed)
    faces = [UNIT, point(F(1, 3)), Polyhedron.interval(-1, F(1, 2))]
    psi = rd({key(rng.choice(faces), rng.randint(0, 2), rng.randint(0, 2)): rng.randint(-3, 3) for _ in range(3)})
    chi = rd({key(rng.choice(faces), rng.randint(0, 2), rng.randint(0, 2)): rng.randint(-3, 3) for _ in range(3)})
    p, q = rand_poly(rng, 1, 3), rand_poly(rng, 1, 3)
    c = F(rng.randint(-4, 4), rng.randint(1, 4))
    assert (psi + chi).pair(k, p) == psi.pair(k, p) + chi.pair(k, p)
    assert psi.pair(k, p + q * c) == psi.pair(k, p) + c * psi.pair(k, q)


@given(seeds)
def test_rdist_derivative_sign_convention(seed):
    rng = random.Random(seed)
    phi = rand_poly(rng, 1, 4)
    r = F(rng.randint(-4, 4), rng.randint(1, 3))
    for j in range(4):
        got = rd({key(point(r), alpha=j): 1}).pair(1, phi)
        assert got == (-1) ** j * phi.partial((j,)).evaluate((r,))


# ---------------------------------------------------------------------- series


def test_series_pairing_examples():
    assert expand(M1, 3).pair(5, X * X) == F(11, 5)
    line = AsymptoticSeries(1, 1, 0, {1: {key(Polyhedron.whole_space(1)): 1}})
    assert line.pair(7, ONE, Window.parse("[0,1]")) == 7
    assert expand(M3, 1).pair(4, ONE) == 14
    assert theta_pair_poly(M3, 4, ONE) == 15


def test_series_leading_exponent_bookkeeping():
    with pytest.raises(DistributionError):
        AsymptoticSeries(1, 0, 1, {1: {key(UNIT): 1}})
    a = expand(M3, 2)
    assert a.s == 2 and a.leading()[0] == 2


def test_series_transform_examples():
    a1 = expand(M1, 4)
    assert a1.translate((2,)).equals(expand(M2, 4))
    assert a1.scale(QuasiPolynomial.lam(1, 0) + 1).equals(expand(M3, 4))
    assert a1.translate((0,)).equals(a1)


@given(st.integers(-3, 3), st.integers(2, 5))
def test_translate_inverse_is_identity(s, order):
    a = expand(M3, order)
    assert a.translate((s,)).translate((-s,)).equals(a)


@given(seeds, st.integers(1, 4))
def test_series_arithmetic_is_pointwise(seed, k):
    rng = random.Random(seed)
    m, n = rand_finite_m(rng, 1), rand_finite_m(rng, 1)
    phi = rand_poly(rng, 1, 2)
    a, b = expand(m, 4), expand(n, 4)
    low = max(a.s - a.order, b.s - b.order)
    a, b = a.truncate(a.s - low), b.truncate(b.s - low)
    assert (a + b).pair(k, phi) == a.pair(k, phi) + b.pair(k, phi)
    assert (a - a).is_zero()


@settings(max_examples=15)
@given(seeds, st.integers(1, 2))
def test_series_exact_on_polynomials(seed, d):
    # terms below k^(-deg phi) pair to zero, so order s + deg phi is exact
    rng = random.Random(seed)
    m = rand_finite_m(rng, d)
    deg = rng.randint(0, 2)
    phi = rand_poly(rng, d, deg)
    series = expand(m, declared_exponent(m) + deg)
    for k in range(1, 6):
        assert series.pair(k, phi) == theta_pair_poly(m, k, phi)
