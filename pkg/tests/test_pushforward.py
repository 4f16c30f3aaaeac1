from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from asymptheta.distributions import AsymptoticSeries, Window, theta_pair_poly, theta_sample
from asymptheta.expansion import declared_exponent, expand
from asymptheta.piecewise import PiecewiseQP, equal_on_window
from asymptheta.polyhedra import Polyhedron
from asymptheta.pushforward import (PushforwardError, QuotientMap, ReconstructionError, line_chambers,
                                    properness_check, push_eval, push_reconstruct, push_series_pair, push_theta)
from asymptheta.quasipoly import QuasiPolynomial as QP
from asymptheta.scalars import Poly
from generators import rand_finite_m, rand_poly, rand_qp

seeds = st.integers(0, 10**6)
HALF = F(1, 2)
UNIT = Polyhedron.interval(0, 1)
TRI = Polyhedron.simplex([(0, 0), (1, 0), (0, 1)])
SIMPLEX = PiecewiseQP.indicator(TRI)
SUM_MAP = QuotientMap.of([[1, 1]])
M3 = PiecewiseQP.indicator(UNIT, q=QP.lam(1, 0) + 1)
X = Poly.var(1, 0)
ONE = Poly.const(1, 1)


def final_example():
    """1/4 (1 - (-1)^a)(1 - (-1)^(a-b)) on 0 <= a <= 2, |b| <= a, pushed along (a, b) -> b."""
    p = Polyhedron([((1, 0), 0), ((-1, 0), -2), ((1, 1), 0), ((1, -1), 0)], 2)
    q = (1 - QP.char(2, [HALF, 0])) * (1 - QP.char(2, [HALF, -HALF])) * F(1, 4)
    return PiecewiseQP.indicator(p, q=q), QuotientMap.of([[0, 1]])


def brute_fiber_sum(m, rows, k, lam, radius):
    """Sum of m(k, x) over integer x in a box with rows . x = lam."""
    total = 0
    for x in itertools.product(range(-radius, radius + 1), repeat=m.dim):
        if all(sum(a * b for a, b in zip(r, x)) == l for r, l in zip(rows, lam)):
            total = total + m.evaluate(k, x)
    return total


# ---------------------------------------------------------------------- quotient maps


def test_image_lattice_basis():
    diag = QuotientMap.of([[2, 2]])
    assert diag.image_basis == ((2,),)
    assert diag.coords == ((1, 1),)
    assert QuotientMap.of([[F(1, 2), 0]]).coords == ((1, 0),)
    with pytest.raises(PushforwardError):
        QuotientMap.of([[1, 1], [2, 2]])
    with pytest.raises(PushforwardError):
        QuotientMap.of([[1, 1]], image_basis=[[2]])


def test_pullback_composes():
    pi = QuotientMap.of([[1, -2]])
    pulled = pi.pullback(X * X + 1)
    for x, y in [(0, 0), (1, 2), (-3, 1)]:
        assert pulled.evaluate((x, y)) == (x - 2 * y) ** 2 + 1


# ---------------------------------------------------------------------- properness


def test_properness_examples():
    assert properness_check(SIMPLEX, SUM_MAP)
    plane = PiecewiseQP.indicator(Polyhedron.whole_space(2))
    assert not properness_check(plane, QuotientMap.of([[1, 0]]))
    half = PiecewiseQP.indicator(Polyhedron([((1, 0), 0)], 2))
    cert = properness_check(half, QuotientMap.of([[1, 0]]))
    assert not cert and cert.violations and all(ray[0] == 0 for _, ray in cert.violations)
    ray = PiecewiseQP.indicator(Polyhedron([((1, 0), 0), ((0, 1), 0), ((0, -1), 0)], 2))
    assert properness_check(ray, QuotientMap.of([[1, 0]]))
    assert not properness_check(ray, QuotientMap.of([[0, 1]]))


def test_improper_map_raises():
    half = PiecewiseQP.indicator(Polyhedron([((1, 0), 0)], 2))
    with pytest.raises(PushforwardError, match="proper"):
        push_eval(half, QuotientMap.of([[1, 0]]), 1, (0,))


# ---------------------------------------------------------------------- fiber sums


def test_push_eval_simplex():
    for k in range(1, 7):
        for lam in range(-2, k + 3):
            want = lam + 1 if 0 <= lam <= k else 0
            assert push_eval(SIMPLEX, SUM_MAP, k, (lam,)) == want


def test_push_eval_final_example():
    m, pi = final_example()
    assert push_eval(m, pi, 2, (0,)) == 2
    assert brute_fiber_sum(m, [(0, 1)], 2, (0,), 6) == 2
    assert push_eval(m, pi, 2, (9,)) == 0


@settings(max_examples=20)
@given(seeds, st.sampled_from([[[1, 0]], [[1, 1]], [[1, -2]], [[2, 1]]]), st.integers(1, 3))
def test_push_eval_matches_brute_force(seed, rows, k):
    m = rand_finite_m(random.Random(seed), 2)
    pi = QuotientMap.of(rows)
    radius = 3 * k + 2
    for lam in range(-6, 7):
        # image coordinates divide out the content of the row
        assert push_eval(m, pi, k, (lam,)) == brute_fiber_sum(m, pi.coords, k, (lam,), radius)


# ---------------------------------------------------------------------- theta samples


def test_push_theta_simplex():
    w = Window.parse("[-1,2]")
    s = push_theta(SIMPLEX, SUM_MAP, 3, w)
    assert s.atoms == [((F(i, 3),), i + 1) for i in range(4)]
    s = push_theta(SIMPLEX, SUM_MAP, 1, w)
    assert s.atoms == [((F(0),), 1), ((F(1),), 2)]
    assert push_theta(SIMPLEX, SUM_MAP, 3, Window.parse("(1/3,2/3)")).atoms == []


def test_push_theta_projects_full_sample():
    # project the atoms of Theta(m; k) by hand and merge weights
    for k in range(1, 6):
        full = theta_sample(SIMPLEX, k, Window.parse("[-1,2]x[-1,2]"))
        merged: dict = {}
        for (a, b), w in full.atoms:
            merged[a + b] = merged.get(a + b, 0) + w
        want = sorted(((x,), w) for x, w in merged.items())
        assert push_theta(SIMPLEX, SUM_MAP, k, Window.parse("[-1,3]")).atoms == want


# ---------------------------------------------------------------------- series pairing


def test_push_series_pair_examples():
    area = AsymptoticSeries(2, 2, 0, {2: {(TRI, (0, 0), (0, 0)): 1}})
    for k in range(1, 6):
        assert push_series_pair(area, SUM_MAP, k, X) == F(k * k, 3)
        assert push_series_pair(area, SUM_MAP, k, Poly(1)) == 0
    # the image of x mu_[0,1] paired with x
    dens = AsymptoticSeries(1, 2, 0, {2: {(UNIT, (0,), (1,)): 1}})
    assert dens.pair(4, X) == F(16, 3)
    edge = Polyhedron.simplex([(1, 0), (0, 1)])
    boundary = AsymptoticSeries(2, 0, 0, {0: {(edge, (0, 0), (0, 0)): 1}})
    for phi in (ONE, X, X * X * X - 2 * X):
        assert push_series_pair(boundary, SUM_MAP, 1, phi) == phi.evaluate((1,))


def test_push_series_pair_rejects_unbounded_faces():
    half = Polyhedron([((1, 0), 0), ((0, 1), 0), ((0, -1), 0)], 2)
    series = AsymptoticSeries(2, 1, 0, {1: {(half, (0, 0), (0, 0)): 1}})
    with pytest.raises(PushforwardError):
        push_series_pair(series, QuotientMap.of([[0, 1]]), 1, X)


@pytest.mark.parametrize("deg", [0, 1, 2])
def test_pairing_functoriality_simplex(deg):
    pushed = push_reconstruct(SIMPLEX, SUM_MAP)
    phi = X ** deg
    a = expand(SIMPLEX, declared_exponent(SIMPLEX) + deg)
    b = expand(pushed, declared_exponent(pushed) + deg)
    for k in range(1, 6):
        assert push_series_pair(a, SUM_MAP, k, phi) == b.pair(k, phi) == theta_pair_poly(M3, k, phi)


# ---------------------------------------------------------------------- reconstruction


def test_reconstruct_simplex_is_m3():
    got = push_reconstruct(SIMPLEX, SUM_MAP)
    assert len(got.pieces) == 1
    q, cone = got.pieces[0]
    assert cone.base == UNIT and (q - (QP.lam(1, 0) + 1)).is_zero()


def test_reconstruct_final_example():
    m, pi = final_example()
    k, b, even = QP.k_var(1), QP.lam(1, 0), 1 + QP.char(1, [HALF])
    want = {Polyhedron.point((0,)).key: -k,
            Polyhedron.interval(0, 2).key: even * (k * HALF - b * F(1, 4)),
            Polyhedron.interval(-2, 0).key: even * (k * HALF + b * F(1, 4))}
    got = push_reconstruct(m, pi)
    assert {c.base.key for _, c in got.pieces} == set(want)
    for q, c in got.pieces:
        assert (q - want[c.base.key]).is_zero()


def test_reconstruct_identity_returns_m():
    m = PiecewiseQP.indicator(UNIT, q=QP.lam(1, 0) * QP.lam(1, 0) + QP.char(1, (F(1, 3),)))
    got = push_reconstruct(m, QuotientMap.identity(1))
    assert equal_on_window(got, m, 10)[0]


def test_line_chambers_simplex():
    assert line_chambers(SIMPLEX, SUM_MAP) == [UNIT]


def test_reconstruction_failure_reports_point():
    # a period bound that is too small cannot fit (-1)^lambda
    m = PiecewiseQP.indicator(Polyhedron.simplex([(0, 0), (2, 0), (0, 2)]), q=QP.char(2, (HALF, 0)))
    with pytest.raises(ReconstructionError) as err:
        push_reconstruct(m, SUM_MAP, degree=0, period=1)
    assert err.value.point is not None or "samples" in str(err.value)


def test_fit_is_stable_under_extra_rows():
    # raising the degree and period bounds by one more row reproduces the same function
    m, pi = final_example()
    base = push_reconstruct(m, pi)
    bigger = push_reconstruct(m, pi, degree=3, period=4)
    assert equal_on_window(base, bigger, 12)[0]
    by_base = {c.base.key: q for q, c in base.pieces}
    for q, c in bigger.pieces:
        assert (by_base[c.base.key] - q).is_zero()


def lattice_triangle_m(rng: random.Random) -> PiecewiseQP:
    """One lattice triangle (possibly degenerate) with a random weight of small period."""
    pts = [(rng.randint(0, 2), rng.randint(0, 2)) for _ in range(3)]
    return PiecewiseQP.indicator(Polyhedron.from_generators(pts), q=rand_qp(rng, 2, max_den=2))


@settings(max_examples=10)
@given(seeds, st.sampled_from([[[1, 0]], [[1, 1]], [[1, -1]]]))
def test_commuting_square_random(seed, rows):
    m = lattice_triangle_m(random.Random(seed))
    pi = QuotientMap.of(rows)
    pushed = push_reconstruct(m, pi)
    w = Window.closed([-4], [4])
    for k in range(1, 7):
        assert push_theta(m, pi, k, w).atoms == theta_sample(pushed, k, w).atoms


@settings(max_examples=8)
@given(seeds)
def test_pairing_functoriality_random(seed):
    rng = random.Random(seed)
    m = lattice_triangle_m(rng)
    pi = QuotientMap.of([[1, 1]])
    pushed = push_reconstruct(m, pi)
    phi = rand_poly(rng, 1, 2)
    a = expand(m, declared_exponent(m) + 2)
    b = expand(pushed, declared_exponent(pushed) + 2)
    for k in (1, 2, 3):
        assert push_series_pair(a, pi, k, phi) == b.pair(k, phi)


def test_period_bound_covers_halved_fibers():
    # (-1)^a on the segment a - b = k, k <= a <= 2k: the pushed value along a + b has period 4
    seg = Polyhedron.simplex([(1, 0), (2, 1)])
    m = PiecewiseQP.indicator(seg, q=QP.char(2, (HALF, 0)) * (QP.k_var(2) * 2 + 2))
    pushed = push_reconstruct(m, SUM_MAP)
    for k in range(1, 9):
        for y in range(0, 4 * k + 1):
            want = (-1) ** ((y + k) // 2) * (2 * k + 2) if (y + k) % 2 == 0 and k <= (y + k) // 2 <= 2 * k else 0
            assert pushed.evaluate(k, (y,)) == want == push_eval(m, SUM_MAP, k, (y,))
