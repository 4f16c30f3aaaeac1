"""Twisted Bernoulli polynomials B_{n,zeta}(x).

They are the coefficients of t e^{xt} / (zeta e^t - 1) = sum B_{n,zeta}(x) t^n / n!.
For zeta = 1 these are the classical Bernoulli polynomials; for zeta != 1 the
constant B_{0,zeta} vanishes.  Roots of unity are given by a rational u with
zeta = exp(2 pi i u).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .scalars import Cyclotomic, Poly, frac_part, to_fraction


def _canon(u) -> Fraction:
    return frac_part(to_fraction(u))


@lru_cache(maxsize=None)
def _constant_terms(u: Fraction, nmax: int) -> tuple:
    """B_{n,zeta}(0) for n = 0..nmax."""
    zeta = Cyclotomic.exp2pi(u)
    # f(t) = t / (zeta e^t - 1) = sum f_n t^n
    f = []
    if u == 0:
        # t / (e^t - 1): (e^t - 1)/t = sum t^m/(m+1)!
        for n in range(nmax + 1):
            acc = Fraction(int(n == 0))
            for m in range(1, n + 1):
                acc -= f[n - m] * Fraction(1, math.factorial(m + 1))
            f.append(acc)
        return tuple(Cyclotomic.rational(f[n] * math.factorial(n)) for n in range(nmax + 1))
    inv = (zeta - 1).inverse()
    for n in range(nmax + 1):
        acc = Cyclotomic.rational(int(n == 1))
        for m in range(1, n + 1):
            acc = acc - zeta * f[n - m] * Fraction(1, math.factorial(m))
        f.append(acc * inv)
    return tuple(f[n] * math.factorial(n) for n in range(nmax + 1))


@lru_cache(maxsize=None)
def _bernoulli_cached(n: int, u: Fraction) -> Poly:
    consts = _constant_terms(u, n)
    terms = {}
    for j in range(n + 1):
        c = consts[j] * math.comb(n, j)
        if c:
            terms[(n - j,)] = c
    return Poly(1, terms)


def zeta_bernoulli(n: int, u=0) -> Poly:
    """B_{n,zeta} as a polynomial in one variable, zeta = exp(2 pi i u)."""
    if n < 0:
        raise ValueError("order must be non-negative")
    return _bernoulli_cached(n, _canon(u))


def zeta_bernoulli_value(n: int, u, x):
    """B_{n,zeta}(x) for rational x."""
    return zeta_bernoulli(n, u).evaluate([to_fraction(x)])


def bernoulli_number(n: int) -> Fraction:
    return to_fraction(zeta_bernoulli(n, 0).constant_term()) if n else Fraction(1)


def periodic_bernoulli(n: int, x) -> Fraction:
    """b_n(x) = B_n({x})."""
    return zeta_bernoulli_value(n, 0, frac_part(to_fraction(x)))
