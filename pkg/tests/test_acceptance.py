"""Acceptance criteria AC1-AC10; each test prints one PASS/FAIL line."""

from __future__ import annotations

import itertools
import math
import random
import time
from fractions import Fraction as F

import mpmath
import pytest

from acceptance_log import criterion
from generators import rand_finite_m, rand_kernel_element
from asymptheta import (PiecewiseQP, Polyhedron, Poly, QuasiPolynomial as QP, QuotientMap, RDist, Window,
                        equal_on_window, expand, push_reconstruct, push_series_pair, push_theta, tangent_cone_map,
                        theta_pair_poly, theta_sample)
from asymptheta.bernoulli import bernoulli_number
from asymptheta.oracle import genfunc_crosscheck, oracle_theta_pair, remainder_table, unicity_probe
from asymptheta.piecewise import check_local_agreement, pqp_kernel_witness
from asymptheta.scalars import Periodic

I = Polyhedron.interval(0, 1)
M1 = PiecewiseQP.indicator(I)
M3 = PiecewiseQP.indicator(I, q=QP.lam(1, 0) + 1)
SIMPLEX = PiecewiseQP.indicator(Polyhedron.simplex([(0, 0), (1, 0), (0, 1)]))
SUM_MAP = QuotientMap.of([[1, 1]])
HALF = F(1, 2)


def final_example():
    """m = 1/4 (1 - (-1)^a)(1 - (-1)^(a-b)) on 0 <= a <= 2, |b| <= a; pushed along (a, b) -> b."""
    p = Polyhedron([((1, 0), 0), ((-1, 0), -2), ((1, 1), 0), ((1, -1), 0)], 2)
    q = (1 - QP.char(2, [HALF, 0])) * (1 - QP.char(2, [HALF, -HALF])) * F(1, 4)
    return PiecewiseQP.indicator(p, q=q), QuotientMap.of([[0, 1]])


def final_example_pushed() -> PiecewiseQP:
    k, b, even = QP.k_var(1), QP.lam(1, 0), 1 + QP.char(1, [HALF])
    return (PiecewiseQP.indicator(Polyhedron.point((0,)), q=-k)
            + PiecewiseQP.indicator(Polyhedron.interval(0, 2), q=even * (k * HALF - b * F(1, 4)))
            + PiecewiseQP.indicator(Polyhedron.interval(-2, 0), q=even * (k * HALF + b * F(1, 4))))


def rdist(dim, terms) -> RDist:
    return RDist(dim, {key: Periodic.const(c) for key, c in terms.items()})


def same(a: RDist, b: RDist) -> bool:
    return (a - b).is_structurally_zero()


# ---------------------------------------------------------------------- AC1


@criterion("AC1", "Euler-Maclaurin exactness for m1, N=5, k=1..50, phi in {1,x,x^2,x^3}, < 1 s")
def test_ac1_euler_maclaurin_exactness():
    x = Poly.var(1, 0)
    phis = [Poly.const(1, 1), x, x * x, x * x * x]
    t0 = time.perf_counter()
    series = expand(M1, 5)
    mismatches = [(k, j) for k in range(1, 51) for j, phi in enumerate(phis)
                  if series.pair(k, phi) != theta_pair_poly(M1, k, phi)]
    elapsed = time.perf_counter() - t0
    assert mismatches == []
    for k in range(1, 51):
        ref = F(k, 3) + HALF + F(1, 6 * k)
        assert sum(F(lam, k) ** 2 for lam in range(k + 1)) == ref
        assert oracle_theta_pair(M1, k, x * x, [-1], [2]) == ref
        assert series.pair(k, x * x) == ref
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


# ---------------------------------------------------------------------- AC2


@criterion("AC2", "expansion of m1 to order 3: k mu, (delta_0 + delta_1)/2, Bernoulli endpoint terms")
def test_ac2_distexp_structure():
    series = expand(M1, 3)
    p0, p1 = Polyhedron.point((0,)), Polyhedron.point((1,))
    assert bernoulli_number(2) == F(1, 6)
    assert bernoulli_number(3) == 0
    assert same(series.coefficient(0), rdist(1, {(I, (0,), (0,)): 1}))
    assert same(series.coefficient(1), rdist(1, {(p0, (0,), (0,)): HALF, (p1, (0,), (0,)): HALF}))
    for n in (2, 3):
        # k * B_n / (n! k^n) (-1)^(n-1) (delta_1^(n-1) - delta_0^(n-1))
        c = bernoulli_number(n) / math.factorial(n) * (-1) ** (n - 1)
        want = rdist(1, {(p1, (n - 1,), (0,)): c, (p0, (n - 1,), (0,)): -c} if c else {})
        assert same(series.coefficient(n), want)
    assert series.format().split("\n") == [
        "k * mu_[0,1]",
        "1/2 * delta_0 + 1/2 * delta_1",
        "1/12 * k^-1 * D_x delta_0 - 1/12 * k^-1 * D_x delta_1",
    ]


# ---------------------------------------------------------------------- AC3


@criterion("AC3", "leading and subleading terms of m3 and of the 2-D simplex")
def test_ac3_sublead():
    s3 = expand(M3, 1)
    assert s3.s == 2
    assert same(s3.coefficient(0), rdist(1, {(I, (0,), (1,)): 1}))
    assert same(s3.coefficient(1), rdist(1, {(I, (0,), (0,)): 1, (Polyhedron.point((1,)), (0,), (0,)): HALF}))
    ss = expand(SIMPLEX, 1)
    tri = Polyhedron.simplex([(0, 0), (1, 0), (0, 1)])
    z = (0, 0)
    assert ss.s == 2
    assert same(ss.coefficient(0), rdist(2, {(tri, z, z): 1}))
    edges = [Polyhedron.from_generators(e) for e in ([(0, 0), (1, 0)], [(0, 0), (0, 1)], [(1, 0), (0, 1)])]
    assert same(ss.coefficient(1), rdist(2, {(e, z, z): HALF for e in edges}))


# ---------------------------------------------------------------------- AC4


@criterion("AC4", "kernel: (-1)^lambda [C_R] and 50 random kernel-family elements expand to 0, < 10 s")
def test_ac4_kernel():
    rng = random.Random(2024)
    samples = [rand_kernel_element(rng, 1 + i % 2) for i in range(50)]
    t0 = time.perf_counter()
    alt = PiecewiseQP.indicator(Polyhedron.whole_space(1), q=QP.char(1, [HALF]))
    assert expand(alt, 6).is_structurally_zero()
    series = [(expand(s.m, 3, warn=False), expand(s.split, 3, warn=False)) for s in samples]
    elapsed = time.perf_counter() - t0
    for s, (a, b) in zip(samples, series):
        assert a.is_zero() and b.is_zero(), s
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    # independent membership certificate: an annihilating finite difference, and m itself is nonzero
    cancelling = 0
    for s in samples:
        assert pqp_kernel_witness(s.m, [(s.eta, s.zeta_u)], 4, k_max=4) is not None, s
        assert any(s.m.evaluate(k, lam) for k in range(1, 5) for lam in itertools.product(range(-4, 5), repeat=s.m.dim))
        cancelling += any(not expand(PiecewiseQP(s.m.dim, [p]), 3, warn=False).is_zero() for p in s.split.pieces)
    assert cancelling >= 25


# ---------------------------------------------------------------------- AC5


@criterion("AC5", "unicity probe finds a witness for 50 random nonzero finite m (dims 1-2, denominators <= 4)")
def test_ac5_unicity():
    rng = random.Random(5)
    found = 0
    while found < 50:
        d = 1 + found % 2
        m = rand_finite_m(rng, d)
        if not any(m.evaluate(k, lam) for k in range(1, 5) for lam in m.support_points(k)):
            continue
        res = unicity_probe(m)
        assert res.witness is not None, m
        # the witness expansion is visibly nonzero on some monomial pairing
        series = expand(m.twist(res.witness), 2, warn=False)
        monos = [Poly.monomial(e) for e in itertools.product(range(3), repeat=d)]
        assert any(series.pair(k, phi) != 0 for k in range(1, 5) for phi in monos), m
        found += 1


# ---------------------------------------------------------------------- AC6


@criterion("AC6", "pushforward reconstruction: final worked example and simplex -> m3, exact")
def test_ac6_pushforward_examples():
    m, pi = final_example()
    want = final_example_pushed()
    # the closed forms against a direct double loop
    for k in range(1, 7):
        for b in range(-2 * k - 1, 2 * k + 2):
            direct = sum(F((1 - (-1) ** a) * (1 - (-1) ** (a - b)), 4)
                         for a in range(0, 2 * k + 1) if -a <= b <= a)
            assert want.evaluate(k, (b,)) == direct
    got = push_reconstruct(m, pi)
    assert equal_on_window(got, want, 12)[0]
    by_base = {c.base.key: q for q, c in got.pieces}
    assert len(by_base) == 3
    for q, c in want.pieces:
        assert (by_base[c.base.key] - q).is_zero()
    got3 = push_reconstruct(SIMPLEX, SUM_MAP)
    assert equal_on_window(got3, M3, 12)[0]
    assert len(got3.pieces) == 1 and (got3.pieces[0][0] - M3.pieces[0][0]).is_zero()
    assert got3.pieces[0][1].base.key == I.key


# ---------------------------------------------------------------------- AC7


@criterion("AC7", "commuting square k=1..12 and series pairing functoriality for deg phi' <= 2")
def test_ac7_commuting_square():
    x = Poly.var(1, 0)
    for m, pi in (final_example(), (SIMPLEX, SUM_MAP)):
        pushed = push_reconstruct(m, pi)
        w = Window.closed([-3], [3])
        for k in range(1, 13):
            assert push_theta(m, pi, k, w).atoms == theta_sample(pushed, k, w).atoms
        a, b = expand(m, 3), expand(pushed, 3)
        for phi in (Poly.const(1, 1), x, x * x):
            for k in range(1, 6):
                assert push_series_pair(a, pi, k, phi) == b.pair(k, phi)


# ---------------------------------------------------------------------- AC8


@criterion("AC8", "tangent cones: T_v m = m on C_B for k > K and T_v A = A(T_v m) near v, 30 random m")
def test_ac8_local_determination():
    rng = random.Random(7)
    for i in range(30):
        d = 1 + i % 2
        m = rand_finite_m(rng, d)
        a = expand(m, 2, warn=False)
        verts = sorted({v for _, c in m.pieces for v in c.base.vertices})
        assert verts
        for v in verts:
            ok, win, bad = check_local_agreement(m, v)
            assert ok, (m, v, win, bad)
            assert win.k_threshold >= 1 and win.rho > 0
            b = expand(tangent_cone_map(m, v), 2, warn=False)
            low = max(a.s - a.order, b.s - b.order)
            ta, tb = a.truncate(a.s - low), b.truncate(b.s - low)
            box = Window.closed([c - win.rho / 2 for c in v], [c + win.rho / 2 for c in v])
            for phi in (Poly.const(d, 1), Poly.var(d, d - 1) ** 2):
                for k in (1, 2, 3):
                    assert ta.pair(k, phi, box) == tb.pair(k, phi, box), (m, v, k)


# ---------------------------------------------------------------------- AC9


@criterion("AC9", "remainder table for m1 with a Gaussian, N=3, k=10..80 is bounded")
def test_ac9_remainder_table():
    rep = remainder_table(M1, lambda t: mpmath.exp(-t * t), 3, [10, 20, 40, 80])
    assert rep.verdict == "bounded", rep.format_table()
    assert max(rep.scaled) <= 2 * rep.band * rep.scaled[0]
    assert all(r > 0 for r in rep.remainders)
    # the unscaled remainder decays like k^-(N - s + 1) (the next Bernoulli term), up to the band
    assert rep.remainders[-1] <= rep.band * rep.remainders[0] / 8 ** 3


# ---------------------------------------------------------------------- AC10


@criterion("AC10", "1-D generating-function Laurent truncation at z/k, k=100, N=6, within 1e-10 at 10 points")
def test_ac10_genfunc():
    points = [0.5 - 0.3j, 2 - 0.1j, -1.3 - 0.7j, 1 - 0.5j, 3 - 2j, -2.5 - 0.2j, 0.1 - 1j, 4 - 3j, -0.7 - 0.05j,
              1.7 - 2.5j]
    for i, z in enumerate(points):
        g = [F(0), F(1, 2), F(1, 3), F(1, 6), F(3, 4)][i % 5]
        chk = genfunc_crosscheck([[1]], [g], [z], 100, 6)
        assert chk.difference < 1e-10, (z, g, chk)
        assert abs(chk.closed) > 0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
