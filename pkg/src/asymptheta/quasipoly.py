"""Quasi-polynomials on Z + Lambda in exponential-polynomial form.

A quasi-polynomial is stored as a finite map (u, g) -> p where u is a rational
k-twist, g a rational character vector (both taken mod 1) and p a polynomial in
the variables (k, lambda_1, ..., lambda_d).  It represents

    (k, lambda) -> sum exp(2 pi i (u k + <g, lambda>)) p(k, lambda).

This form is unique, so canonical forms compare by equality of the maps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .linalg import (
    coords_in_basis,
    dot,
    hermite_complement,
    inverse,
    saturate,
    transpose,
)
from .scalars import (
    Cyclotomic,
    Periodic,
    Poly,
    ScalarError,
    frac_part,
    lcm_all,
    simplify_scalar,
    to_fraction,
)

Character = tuple[Fraction, ...]


class QuasiPolynomialError(ValueError):
    pass


def character(values: Sequence) -> Character:
    return tuple(frac_part(to_fraction(v)) for v in values)


def char_value(g: Sequence[Fraction], lam: Sequence) -> Cyclotomic:
    """g^lambda = exp(2 pi i <g, lambda>) for an integral lambda."""
    return Cyclotomic.exp2pi(sum((Fraction(a) * to_fraction(b) for a, b in zip(g, lam)), Fraction(0)))


class QuasiPolynomial:
    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Mapping[tuple, Poly] | None = None):
        self.dim = dim
        clean: dict[tuple, Poly] = {}
        for (u, g), p in (terms or {}).items():
            key = (frac_part(to_fraction(u)), character(g))
            if len(key[1]) != dim:
                raise QuasiPolynomialError("character dimension mismatch")
            if p.nvars != dim + 1:
                raise QuasiPolynomialError("polynomial must have variables (k, lambda_1..lambda_d)")
            clean[key] = clean[key] + p if key in clean else p
        self.terms = {k: v for k, v in sorted(clean.items()) if not v.is_zero()}

    # ------------------------------------------------------------------ builders
    @staticmethod
    def zero(dim: int) -> "QuasiPolynomial":
        return QuasiPolynomial(dim)

    @staticmethod
    def from_poly(dim: int, p: Poly, u=0, g: Sequence | None = None) -> "QuasiPolynomial":
        g = g if g is not None else (0,) * dim
        return QuasiPolynomial(dim, {(u, tuple(g)): p})

    @staticmethod
    def const(dim: int, c=1) -> "QuasiPolynomial":
        return QuasiPolynomial.from_poly(dim, Poly.const(dim + 1, to_fraction(c) if not isinstance(c, Cyclotomic) else c))

    @staticmethod
    def char(dim: int, g: Sequence, u=0) -> "QuasiPolynomial":
        return QuasiPolynomial.from_poly(dim, Poly.const(dim + 1, Fraction(1)), u, g)

    @staticmethod
    def k_var(dim: int) -> "QuasiPolynomial":
        return QuasiPolynomial.from_poly(dim, Poly.var(dim + 1, 0))

    @staticmethod
    def lam(dim: int, i: int) -> "QuasiPolynomial":
        return QuasiPolynomial.from_poly(dim, Poly.var(dim + 1, i + 1))

    # ------------------------------------------------------------------ arithmetic
    def _coerce(self, other):
        if isinstance(other, QuasiPolynomial):
            if other.dim != self.dim:
                raise QuasiPolynomialError("dimension mismatch")
            return other
        if isinstance(other, (int, Fraction, Cyclotomic)) and not isinstance(other, bool):
            return QuasiPolynomial.const(self.dim, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms = dict(self.terms)
        for k, p in o.terms.items():
            terms[k] = terms[k] + p if k in terms else p
        return QuasiPolynomial(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return QuasiPolynomial(self.dim, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Cyclotomic)) and not isinstance(other, bool):
            return QuasiPolynomial(self.dim, {k: p * other for k, p in self.terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms: dict = {}
        for (u1, g1), p1 in self.terms.items():
            for (u2, g2), p2 in o.terms.items():
                key = (frac_part(u1 + u2), character([a + b for a, b in zip(g1, g2)]))
                prod = p1 * p2
                terms[key] = terms[key] + prod if key in terms else prod
        return QuasiPolynomial(self.dim, terms)

    __rmul__ = __mul__

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).is_zero()

    def __hash__(self):
        return hash(tuple((k, p) for k, p in self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def canonicalize(self) -> "QuasiPolynomial":
        return QuasiPolynomial(self.dim, self.terms)

    @property
    def degree(self) -> int:
        """Maximal total degree in lambda."""
        return max((p.degree_in(range(1, self.dim + 1)) for p in self.terms.values()), default=-1)

    @property
    def total_degree(self) -> int:
        """Maximal total degree in (k, lambda)."""
        return max((p.total_degree() for p in self.terms.values()), default=-1)

    def characters(self) -> list[Character]:
        return sorted({g for _, g in self.terms})

    def denominators(self) -> list[int]:
        out = set()
        for u, g in self.terms:
            out.add(u.denominator)
            out.update(x.denominator for x in g)
        return sorted(out)

    # ------------------------------------------------------------------ evaluation
    def evaluate(self, k: int, lam: Sequence[int]):
        if len(lam) != self.dim:
            raise QuasiPolynomialError("point dimension mismatch")
        point = [Fraction(k)] + [Fraction(x) for x in lam]
        total = Fraction(0)
        for (u, g), p in self.terms.items():
            val = p.evaluate(point)
            if u or any(g):
                val = Cyclotomic.exp2pi(u * k + dot(g, point[1:])) * val
            total = total + val
        return simplify_scalar(total)

    # ------------------------------------------------------------------ actions
    def translate(self, sigma: Sequence) -> "QuasiPolynomial":
        """(tau_sigma q)(k, lambda) = q(k, lambda - sigma) for integral sigma."""
        sigma = [to_fraction(s) for s in sigma]
        if any(s.denominator != 1 for s in sigma):
            raise QuasiPolynomialError("translation vector must be integral")
        n = self.dim + 1
        images = [Poly.var(n, 0)] + [Poly.var(n, i + 1) - sigma[i] for i in range(self.dim)]
        terms = {}
        for (u, g), p in self.terms.items():
            phase = Cyclotomic.exp2pi(-dot(g, sigma))
            terms[(u, g)] = p.compose(images) * phase
        return QuasiPolynomial(self.dim, terms)

    def difference(self, eta: Sequence, zeta_u=0) -> "QuasiPolynomial":
        """(nabla_eta^zeta q) = q - zeta * tau_eta q with zeta = exp(2 pi i zeta_u)."""
        return self - self.translate(eta) * Cyclotomic.exp2pi(zeta_u)

    def twist(self, g0: Sequence, u0=0) -> "QuasiPolynomial":
        """Multiply by exp(2 pi i (u0 k + <g0, lambda>))."""
        terms = {}
        for (u, g), p in self.terms.items():
            terms[(u + to_fraction(u0), tuple(a + to_fraction(b) for a, b in zip(g, g0)))] = p
        return QuasiPolynomial(self.dim, terms)

    def format(self) -> str:
        names = ["k"] + [f"l{i + 1}" for i in range(self.dim)]
        if not self.terms:
            return "0"
        parts = []
        for (u, g), p in self.terms.items():
            phase = []
            if u:
                phase.append(f"e(k*{u})")
            if any(g):
                phase.append("e(<(" + ",".join(str(x) for x in g) + "),l>)")
            body = p.format(names)
            parts.append("*".join(phase + [f"({body})"]) if phase else body)
        return " + ".join(parts)

    def __repr__(self):
        return f"QuasiPolynomial({self.format()})"


# ---------------------------------------------------------------------- finite Fourier transform


def _group_closure(steps: Sequence[tuple[Fraction, ...]], n: int) -> list[tuple[Fraction, ...]]:
    zero = tuple(Fraction(0) for _ in range(n))
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for v in frontier:
            for s in steps:
                w = tuple(frac_part(a + b) for a, b in zip(v, s))
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return sorted(seen)


def qp_character_decompose(dim: int, sublattice: Sequence[Sequence[int]],
                           coset_polys: Mapping[tuple, Poly]) -> QuasiPolynomial:
    """Quasi-polynomial from per-coset polynomial data.

    sublattice: basis vectors of a finite-index sublattice G of Z^(1+d) (coordinates
    (k, lambda)); coset_polys maps a representative of each coset to the polynomial
    that the function equals on that coset.  Missing cosets carry zero.

    The component along the character chi is (1/#) sum_mu chi^(-mu) p_mu.
    """
    n = dim + 1
    basis = [list(map(Fraction, b)) for b in sublattice]
    if len(basis) != n:
        raise QuasiPolynomialError("sublattice must have full rank")
    bmat = transpose(basis)  # columns are basis vectors
    binv = inverse(bmat)
    index = abs(_det_int(bmat))

    def canon(mu):
        c = [sum((binv[i][j] * Fraction(mu[j]) for j in range(n)), Fraction(0)) for i in range(n)]
        f = [frac_part(x) for x in c]
        return tuple(int(sum((bmat[i][j] * f[j] for j in range(n)), Fraction(0))) for i in range(n))

    data: dict[tuple, Poly] = {}
    for mu, p in coset_polys.items():
        key = canon(mu)
        if key in data:
            raise QuasiPolynomialError(f"coset data overlaps at representative {tuple(mu)}")
        data[key] = p
    # characters trivial on the sublattice: rows of B^{-1} taken mod 1
    steps = [tuple(binv[i][j] for j in range(n)) for i in range(n)]
    chars = _group_closure(steps, n)
    if len(chars) != index:
        raise QuasiPolynomialError("character group has unexpected order")
    terms = {}
    for chi in chars:
        acc = Poly(n)
        for mu, p in data.items():
            acc = acc + p * Cyclotomic.exp2pi(-dot(chi, mu))
        acc = acc * Fraction(1, index)
        if not acc.is_zero():
            terms[(chi[0], chi[1:])] = acc
    return QuasiPolynomial(dim, terms)


def _det_int(m) -> int:
    from .linalg import det

    return int(det(m))


def qp_translate_and_difference(q: QuasiPolynomial, sigma: Sequence | None = None, eta: Sequence | None = None,
                                zeta_u=None) -> QuasiPolynomial:
    if sigma is not None:
        return q.translate(sigma)
    if eta is None:
        raise QuasiPolynomialError("need a translation or a difference")
    return q.difference(eta, zeta_u if zeta_u is not None else 0)


# ---------------------------------------------------------------------- polynomial parts


@dataclass(frozen=True)
class IndexProgression:
    """{k : k = start mod modulus} or the empty set when start is None."""

    start: int | None
    modulus: int

    def contains(self, k: int) -> bool:
        return self.start is not None and (k - self.start) % self.modulus == 0

    @property
    def empty(self) -> bool:
        return self.start is None

    def indicator(self) -> Periodic:
        if self.start is None:
            return Periodic.const(0)
        return Periodic(tuple(int(self.contains(r)) for r in range(self.modulus)))


def _crt(a1: int, n1: int, a2: int, n2: int):
    g = math.gcd(n1, n2)
    if (a2 - a1) % g:
        return None
    l = n1 // g * n2
    # solve a1 + n1 t = a2 mod n2
    t = ((a2 - a1) // g) * pow(n1 // g, -1, n2 // g) % (n2 // g) if n2 // g > 1 else 0
    return (a1 + n1 * t) % l, l


def integrality_progression(slope: Sequence[Fraction], offset: Sequence[Fraction]) -> IndexProgression:
    """{k : k * slope + offset is integral} as an arithmetic progression."""
    start, mod = 0, 1
    for s, w in zip(slope, offset):
        s, w = Fraction(s), Fraction(w)
        q = s.denominator
        if (w * q).denominator != 1:
            return IndexProgression(None, 1)
        if q == 1:
            continue
        # k * s.numerator / q + w integral  <=>  k * s.numerator = -w q mod q
        target = (-w * q).numerator % q
        k0 = target * pow(s.numerator % q, -1, q) % q
        res = _crt(start, mod, k0, q)
        if res is None:
            return IndexProgression(None, 1)
        start, mod = res
    return IndexProgression(start % mod, mod)


@dataclass
class LatticeSplit:
    """Lambda = (Lambda meet lin A) + (Lambda meet R) with bases and coordinate maps."""

    dim: int
    inner: list[tuple[int, ...]]
    outer: list[tuple[int, ...]]

    @staticmethod
    def of(lin_basis: Sequence[Sequence], dim: int) -> "LatticeSplit":
        inner = [tuple(v) for v in saturate(lin_basis, dim)] if lin_basis else []
        outer = [tuple(v) for v in hermite_complement(inner, dim)]
        return LatticeSplit(dim, inner, outer)

    def coords(self, x: Sequence) -> tuple[list[Fraction], list[Fraction]]:
        basis = list(self.inner) + list(self.outer)
        c = coords_in_basis(basis, [to_fraction(v) for v in x])
        return c[: len(self.inner)], c[len(self.inner):]

    def outer_point(self, z: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(sum((Fraction(zi) * b[i] for zi, b in zip(z, self.outer)), Fraction(0)) for i in range(self.dim))


@dataclass
class PolynomialPart:
    """(q restricted to the fibres kA + sigma)_pol as a polynomial in (k, w).

    coefficients are k-periodic tables that already include the indicator of the
    index progression and the phases g^lambda_k.
    """

    progression: IndexProgression
    poly: Poly  # variables (k, w_1..w_d), Periodic coefficients

    def at(self, k: int) -> Poly:
        return self.poly.map_coeffs(lambda c: c.at(k) if isinstance(c, Periodic) else c)


def qp_polynomial_part(q: QuasiPolynomial, point: Sequence, lin_basis: Sequence[Sequence],
                       sigma: Sequence) -> PolynomialPart:
    """Polynomial part of q along the family of affine subspaces k A + sigma, A = point + span(lin_basis)."""
    d = q.dim
    split = LatticeSplit.of(lin_basis, d)
    _, z_a = split.coords(point)
    _, z_s = split.coords(sigma)
    prog = integrality_progression(z_a, z_s)
    n = d + 1
    if prog.empty:
        return PolynomialPart(prog, Poly(n))
    ra = split.outer_point(z_a)
    rs = split.outer_point(z_s)
    total = Poly(n)
    for (u, g), p in q.terms.items():
        if any(frac_part(dot(g, b)) for b in split.inner):
            continue
        c1 = dot(g, ra)
        c0 = dot(g, rs)
        period = lcm_all([prog.modulus, c1.denominator, u.denominator])
        table = []
        for r in range(period):
            if prog.contains(r):
                table.append(Cyclotomic.exp2pi(u * r + c1 * r + c0))
            else:
                table.append(Fraction(0))
        coef = Periodic(table)
        if coef:
            total = total + p * coef
    return PolynomialPart(prog, total)


def qp_degree_split(q: QuasiPolynomial, point: Sequence, lin_basis: Sequence[Sequence], sigma: Sequence) -> list[Poly]:
    """p_j(k, v) with (q|E)_pol(k, k v + sigma) = sum_j k^j p_j(k, v); p_j are polynomials in v."""
    part = qp_polynomial_part(q, point, lin_basis, sigma)
    return scale_substitute(part.poly, sigma)


def scale_substitute(poly: Poly, sigma: Sequence) -> list[Poly]:
    """Split p(k, k v + sigma) by powers of k; returns polynomials in v with periodic coefficients."""
    n = poly.nvars
    d = n - 1
    sigma = [to_fraction(s) for s in sigma]
    # variables of the image ring: (k, v_1..v_d)
    kv = Poly.var(n, 0)
    images = [kv] + [kv * Poly.var(n, i + 1) + sigma[i] for i in range(d)]
    full = poly.compose(images)
    by_power: dict[int, dict] = {}
    for e, c in full.terms.items():
        by_power.setdefault(e[0], {})[e[1:]] = c
    top = max(by_power, default=-1)
    return [Poly(d, by_power.get(j, {})) for j in range(top + 1)]
