"""Point-mass samples and distributions built from face measures.

A distribution term is a triple (F, alpha, beta) with a k-periodic coefficient c;
it stands for c(k) * D^alpha (v^beta mu_F), where mu_F is the lattice-normalized
measure on the polyhedron F and D^alpha a multi-index of partial derivatives.
Pairing follows <D^alpha (p mu_F), phi> = (-1)^|alpha| int_F p D^alpha phi dmu_F.

Terms are kept in a normal form relative to the affine hull S of F: derivatives
only along non-pivot coordinates of S (tangential ones are integrated by parts)
and monomials only in pivot coordinates (the others are eliminated on S).
"""

from __future__ import annotations

import itertools
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .linalg import dot, nullspace, solve
from .piecewise import PiecewiseError, PiecewiseQP
from .polyhedra import (
    Polyhedron,
    PolyhedronError,
    Vector,
    describe,
    enumerate_lattice_points,
    integrate_poly_over_polytope,
    vec,
)
from .scalars import (
    Cyclotomic,
    Periodic,
    Poly,
    ceil_fraction,
    format_fraction,
    lcm_all,
    multinomial_power,
    scalar_to_json,
    simplify_scalar,
    to_fraction,
)


class DistributionError(ValueError):
    pass


class AuxiliaryFaceWarning(UserWarning):
    """Raised when a term could not be re-expressed on a face of the input polyhedra."""


def var_names(d: int) -> list[str]:
    return ["x", "y", "z"][:d] if d <= 3 else [f"v{i + 1}" for i in range(d)]


# ---------------------------------------------------------------------- windows and samples


@dataclass(frozen=True)
class Window:
    """A rational box with open/closed flags on each side."""

    lo: Vector
    hi: Vector
    lo_closed: tuple[bool, ...]
    hi_closed: tuple[bool, ...]

    @staticmethod
    def closed(lo: Sequence, hi: Sequence) -> "Window":
        lo, hi = vec(lo), vec(hi)
        return Window(lo, hi, (True,) * len(lo), (True,) * len(lo))

    @staticmethod
    def parse(text: str) -> "Window":
        """Parse e.g. "[-1,2]x(0,1/2]"."""
        parts = [p.strip() for p in text.split("x")]
        lo, hi, lc, hc = [], [], [], []
        for part in parts:
            mt = re.fullmatch(r"([\[\(])\s*([^,]+?)\s*,\s*([^\]\)]+?)\s*([\]\)])", part)
            if not mt:
                raise DistributionError(f"malformed window factor {part!r}")
            lo.append(to_fraction(mt.group(2)))
            hi.append(to_fraction(mt.group(3)))
            lc.append(mt.group(1) == "[")
            hc.append(mt.group(4) == "]")
        return Window(tuple(lo), tuple(hi), tuple(lc), tuple(hc))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x: Sequence) -> bool:
        for xi, a, b, ca, cb in zip(x, self.lo, self.hi, self.lo_closed, self.hi_closed):
            if xi < a or (xi == a and not ca):
                return False
            if xi > b or (xi == b and not cb):
                return False
        return True

    def integer_ranges(self, k: int) -> tuple[list[int], list[int]]:
        lo, hi = [], []
        for a, b, ca, cb in zip(self.lo, self.hi, self.lo_closed, self.hi_closed):
            x = a * k
            lo.append(ceil_fraction(x) if ca or x.denominator != 1 else int(x) + 1)
            y = b * k
            hi.append(math.floor(y) if cb or y.denominator != 1 else int(y) - 1)
        return lo, hi

    def as_polyhedron(self) -> Polyhedron:
        return Polyhedron.box(self.lo, self.hi)

    def format(self) -> str:
        return "x".join(f"{'[' if ca else '('}{format_fraction(a)},{format_fraction(b)}{']' if cb else ')'}"
                        for a, b, ca, cb in zip(self.lo, self.hi, self.lo_closed, self.hi_closed))


@dataclass
class ThetaSample:
    k: int
    window: Window | None
    atoms: list[tuple[Vector, object]]

    def weights(self) -> dict[Vector, object]:
        return dict(self.atoms)

    def pair(self, phi: Poly):
        total = Fraction(0)
        for x, w in self.atoms:
            total = total + w * phi.evaluate(x)
        return simplify_scalar(total)

    def to_csv(self) -> str:
        d = self.window.dim if self.window is not None else (len(self.atoms[0][0]) if self.atoms else 0)
        import json

        lines = [",".join(var_names(d) + ["weight"])]
        for x, w in self.atoms:
            wj = scalar_to_json(w)
            lines.append(",".join(format_fraction(v) for v in x) + "," + (json.dumps(wj) if isinstance(wj, dict) else wj))
        return "\n".join(lines) + "\n"


def _sorted_atoms(weights: Mapping[Vector, object]) -> list[tuple[Vector, object]]:
    return [(x, weights[x]) for x in sorted(weights) if weights[x]]


def theta_sample(m: PiecewiseQP, k: int, window: Window) -> ThetaSample:
    """Exact atoms of Theta(m; k) inside the window."""
    if k <= 0:
        raise DistributionError("k must be positive")
    lo, hi = window.integer_ranges(k)
    box = Polyhedron.box(lo, hi)
    candidates = set()
    for _, cone in m.pieces:
        region = cone.slice(k).intersect(box)
        candidates.update(enumerate_lattice_points(region))
    weights = {}
    for lam in candidates:
        x = tuple(Fraction(v, k) for v in lam)
        if not window.contains(x):
            continue
        w = m.evaluate(k, lam)
        if w:
            weights[x] = w
    return ThetaSample(k, window, _sorted_atoms(weights))


def theta_atoms_global(m: PiecewiseQP, k: int) -> ThetaSample:
    if not m.is_bounded():
        raise DistributionError("global pairing needs bounded pieces; use a window")
    weights: dict = {}
    for q, cone in m.pieces:
        for lam in enumerate_lattice_points(cone.slice(k)):
            x = tuple(Fraction(v, k) for v in lam)
            w = q.evaluate(k, lam)
            weights[x] = weights[x] + w if x in weights else w
    return ThetaSample(k, None, _sorted_atoms({x: simplify_scalar(w) for x, w in weights.items()}))


def theta_pair_poly(m: PiecewiseQP, k: int, phi: Poly, window: Window | None = None):
    """<Theta(m; k), phi> exactly; global when window is None (bounded pieces only)."""
    sample = theta_atoms_global(m, k) if window is None else theta_sample(m, k, window)
    return sample.pair(phi)


# ---------------------------------------------------------------------- geometry of supports


@dataclass(frozen=True)
class HullInfo:
    point: Vector
    rows: tuple[Vector, ...]
    pivots: tuple[int, ...]

    @property
    def nonpivots(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.point)) if i not in self.pivots)

    def parametrize(self, t: Sequence) -> Vector:
        x = list(self.point)
        for ti, row in zip(t, self.rows):
            x = [a + ti * b for a, b in zip(x, row)]
        return tuple(x)


_HULLS: dict = {}
_FACETS: dict = {}


def hull_info(q: Polyhedron) -> HullInfo:
    key = q.key
    if key not in _HULLS:
        rows = tuple(q.lin_basis)
        piv = tuple(next(i for i, v in enumerate(r) if v) for r in rows)
        _HULLS[key] = HullInfo(q.affine_point, rows, piv)
    return _HULLS[key]


def facet_normals(q: Polyhedron) -> list[tuple[Polyhedron, Vector, Fraction]]:
    """Facets G with (a, kappa) such that <a, u> / kappa is the primitive inward normal on lin Q."""
    key = q.key
    if key not in _FACETS:
        out = []
        basis = q.lattice_basis
        for g, a, _ in q.facets():
            vals = [dot(a, b) for b in basis]
            den = lcm_all([v.denominator for v in vals])
            ints = [int(v * den) for v in vals]
            kappa = Fraction(math.gcd(*ints), den) if len(ints) > 1 else Fraction(abs(ints[0]), den)
            out.append((g, a, kappa))
        _FACETS[key] = out
    return _FACETS[key]


def restrict_to_hull(p: Poly, info: HullInfo) -> Poly:
    """p restricted to the affine hull, written in the pivot coordinates only."""
    d = p.nvars
    if not p.terms:
        return p
    images = []
    piv = set(info.pivots)
    for j in range(d):
        if j in piv:
            images.append(Poly.var(d, j))
        else:
            img = Poly.const(d, info.point[j])
            for row, pj in zip(info.rows, info.pivots):
                if row[j]:
                    img = img + Poly.var(d, pj) * row[j]
            images.append(img)
    return p.compose(images)


# ---------------------------------------------------------------------- normal form


@lru_cache(maxsize=None)
def _normal_monomial(q: Polyhedron, alpha: tuple, beta: tuple) -> tuple:
    """Normal form of D^alpha (v^beta mu_Q) as ((F, delta, beta'), coefficient) pairs."""
    d = q.d
    info = hull_info(q)
    out: dict = {}

    def add(key, c):
        if c:
            out[key] = out.get(key, Fraction(0)) + c

    restricted = restrict_to_hull(Poly.monomial(beta), info)
    piv = info.pivots
    # mixed representation: slot p (pivot) means the tangential derivative along row p
    images = []
    for j in range(d):
        if j in piv:
            i = piv.index(j)
            img = Poly.var(d, j)
            for jj in range(d):
                if jj not in piv and info.rows[i][jj]:
                    img = img - Poly.var(d, jj) * info.rows[i][jj]
            images.append(img)
        else:
            images.append(Poly.var(d, j))
    mixed = Poly.monomial(alpha).compose(images)
    for e, c in mixed.terms.items():
        tangential = [e[j] for j in piv]
        if not any(tangential):
            for b, cb in restricted.terms.items():
                add((q, e, b), c * cb)
            continue
        pos = next(i for i, v in enumerate(tangential) if v)
        pj = piv[pos]
        rest = list(e)
        rest[pj] -= 1
        # back to the standard basis
        std_images = []
        for j in range(d):
            if j in piv:
                row = info.rows[piv.index(j)]
                std_images.append(Poly.linear(row))
            else:
                std_images.append(Poly.var(d, j))
        std = Poly.monomial(rest).compose(std_images)
        for a2, ca in std.terms.items():
            for b, cb in restricted.terms.items():
                # derivative of the density along the tangential direction
                if b[pj]:
                    b2 = list(b)
                    b2[pj] -= 1
                    for key, v in _normal_monomial(q, a2, tuple(b2)):
                        add(key, v * c * ca * cb * b[pj])
                # boundary terms
                for g, a, kappa in facet_normals(q):
                    val = dot(a, info.rows[pos]) / kappa
                    if val:
                        for key, v in _normal_monomial(g, a2, b):
                            add(key, v * c * ca * cb * val)
    return tuple((k, v) for k, v in out.items() if v)


def normal_form_terms(q: Polyhedron, op: Poly, dens: Poly) -> dict:
    """Normal form of sum op_alpha D^alpha (dens mu_Q); coefficients keep their scalar type."""
    out: dict = {}
    for alpha, ca in op.terms.items():
        for beta, cb in dens.terms.items():
            c = ca * cb
            for key, v in _normal_monomial(q, alpha, beta):
                val = c * v
                out[key] = out[key] + val if key in out else val
    return out


# ---------------------------------------------------------------------- graded term containers


def _add_into(target: dict, key, val):
    if key in target:
        s = target[key] + val
        if s:
            target[key] = s
        else:
            del target[key]
    elif val:
        target[key] = val


def _as_periodic(x) -> Periodic:
    return x if isinstance(x, Periodic) else Periodic.const(x)


class RDist:
    """Finite sum of c_F(k) D^alpha (v^beta mu_F) in normal form."""

    def __init__(self, dim: int, terms: Mapping | None = None):
        self.dim = dim
        self.terms: dict[tuple, Periodic] = {}
        for key, c in (terms or {}).items():
            _add_into(self.terms, key, _as_periodic(c))

    def __add__(self, other: "RDist") -> "RDist":
        out = RDist(self.dim, self.terms)
        for key, c in other.terms.items():
            _add_into(out.terms, key, c)
        return out

    def __neg__(self):
        return RDist(self.dim, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "RDist":
        return RDist(self.dim, {k: v * c for k, v in self.terms.items()})

    def is_structurally_zero(self) -> bool:
        return not self.terms

    def faces(self) -> list[Polyhedron]:
        return sorted({k[0] for k in self.terms}, key=face_order)

    def pair(self, k: int, phi: Poly, window: Window | None = None):
        total = Fraction(0)
        cache: dict = {}
        for (f, alpha, beta), c in self.terms.items():
            ck = c.at(k)
            if not ck:
                continue
            total = total + ck * _pair_term(f, alpha, beta, phi, window, cache)
        return simplify_scalar(total)

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: term_order(kv[0]))

    def format(self, exponent: int | None = None) -> str:
        items = self.sorted_items()
        if not items:
            return "0"
        return " + ".join(format_term(key, c, exponent, self.dim) for key, c in items).replace("+ -", "- ")

    def __repr__(self):
        return f"RDist({self.format()})"


def face_order(f: Polyhedron):
    return (-f.dim, describe(f), repr(f.key))


def term_order(key):
    f, alpha, beta = key
    return (face_order(f), tuple(-a for a in alpha), tuple(-b for b in beta))


def _pair_term(f: Polyhedron, alpha, beta, phi: Poly, window, cache):
    return _pair_term_cached(f, alpha, beta, phi, window)


@lru_cache(maxsize=65536)
def _pair_term_cached(f: Polyhedron, alpha, beta, phi: Poly, window):
    dphi = phi.partial(alpha)
    integrand = Poly.monomial(beta) * dphi
    region = f
    if window is not None:
        region = _windowed_region(f, window)
        if region.is_empty():
            return Fraction(0)
    elif not f.is_bounded():
        raise DistributionError(f"pairing over the unbounded face {describe(f)} needs a window")
    val = integrate_poly_over_polytope(integrand, region)
    return val * (-1) ** sum(alpha)


@lru_cache(maxsize=16384)
def _windowed_region(f: Polyhedron, window: Window) -> Polyhedron:
    return f.intersect(window.as_polyhedron())


def format_term(key, c: Periodic, exponent: int | None, d: int) -> str:
    f, alpha, beta = key
    names = var_names(d)
    parts = []
    cs = str(c)
    if cs == "-1":
        prefix = "-"
    elif cs == "1":
        prefix = ""
    else:
        prefix = None
        parts.append(cs if c.period > 1 or "/" not in cs and not cs.startswith("(") else cs)
    if exponent is not None and exponent != 0:
        parts.append("k" if exponent == 1 else f"k^{exponent}")
    mono = "*".join(n if b == 1 else f"{n}^{b}" for n, b in zip(names, beta) if b)
    if mono:
        parts.append(mono)
    deriv = " ".join(f"D_{n}" if a == 1 else f"D_{n}^{a}" for n, a in zip(names, alpha) if a)
    measure = ("delta_" if f.dim == 0 else "mu_") + describe(f)
    parts.append(f"{deriv} {measure}" if deriv else measure)
    body = " * ".join(parts)
    if prefix:
        body = prefix + body
    return body


# ---------------------------------------------------------------------- probes and consolidation


def arrangement_probes(hyps: Sequence[tuple[Vector, Fraction]], m: int) -> list[Vector]:
    """One point in every open cell of an arrangement of affine hyperplanes a.t = c in Q^m."""
    uniq = []
    for a, c in hyps:
        if not any(a):
            continue
        lead = next(x for x in a if x)
        key = (tuple(x / lead for x in a), c / lead)
        if key not in uniq:
            uniq.append(key)
    if m == 0:
        return [()]
    if not uniq:
        return [tuple(Fraction(0) for _ in range(m))]
    if m == 1:
        pts = sorted({c / a[0] for a, c in uniq})
        out = [pts[0] - 1, pts[-1] + 1] + [(x + y) / 2 for x, y in zip(pts, pts[1:])]
        return [(x,) for x in sorted(out)]
    out = []
    seen = set()
    for idx, (a, c) in enumerate(uniq):
        # parametrize the hyperplane: t = t0 + M s
        t0 = solve([list(a)], [c])
        basis = nullspace([list(a)], m)
        induced = []
        for jdx, (b, cb) in enumerate(uniq):
            if jdx == idx:
                continue
            coeffs = tuple(dot(b, col) for col in basis)
            if any(coeffs):
                induced.append((coeffs, cb - dot(b, t0)))
        for s in arrangement_probes(induced, m - 1):
            p = tuple(t0[i] + sum((s[j] * basis[j][i] for j in range(m - 1)), Fraction(0)) for i in range(m))
            eps = Fraction(1)
            for jdx, (b, cb) in enumerate(uniq):
                if jdx == idx:
                    continue
                rate = dot(b, a)
                if rate:
                    t = (cb - dot(b, p)) / rate
                    if t:
                        eps = min(eps, abs(t) / 2)
            for sgn in (1, -1):
                x = tuple(pi + sgn * eps * ai for pi, ai in zip(p, a))
                if x not in seen:
                    seen.add(x)
                    out.append(x)
    return out


def _hull_hyperplanes(polys: Iterable[Polyhedron], info: HullInfo) -> list[tuple[Vector, Fraction]]:
    """Facet hyperplanes of polyhedra in the hull, in pivot coordinates."""
    hyps = []
    for p in polys:
        for a, c in p.rows:
            coeffs = tuple(dot(a, row) for row in info.rows)
            const = c - dot(a, info.point)
            if any(coeffs):
                hyps.append((coeffs, const))
    return hyps


@dataclass
class ConsolidationReport:
    merged: int = 0
    dropped: int = 0
    auxiliary: list = field(default_factory=list)


def consolidate(terms: Mapping, targets: Sequence[Polyhedron], report: ConsolidationReport | None = None,
                drop_zero: bool = True) -> dict:
    """Re-express grouped terms on target faces when they agree almost everywhere.

    Terms are grouped by (affine hull, derivative multi-index).  Within a group the
    density is a sum of polynomials times indicators of polyhedra in the hull; it
    is compared with p_F [F] for the target face F with that hull on a point of
    every open cell of the arrangement of all facet hyperplanes involved.
    """
    report = report if report is not None else ConsolidationReport()
    by_hull: dict = {}
    for f in targets:
        by_hull.setdefault(f.affine_key, f)
    target_set = set(targets)
    groups: dict = {}
    for (f, alpha, beta), c in terms.items():
        groups.setdefault((f.affine_key, alpha), {}).setdefault(f, {})[beta] = c
    out: dict = {}
    for (hull_key, alpha), members in groups.items():
        target = by_hull.get(hull_key)
        polys = list(members)
        if len(polys) == 1 and (target is None or polys[0] == target):
            f = polys[0]
            for beta, c in members[f].items():
                _add_into(out, (f, alpha, beta), c)
            if f not in target_set:
                report.auxiliary.append(describe(f))
            continue
        info = hull_info(polys[0])
        m = len(info.rows)
        hyps = _hull_hyperplanes(polys + ([target] if target is not None else []), info)
        probes = arrangement_probes(hyps, m)

        def density(x):
            acc: dict = {}
            for p in polys:
                if p.contains(x):
                    for beta, c in members[p].items():
                        _add_into(acc, beta, c)
            return acc

        values = [(info.parametrize(t), None) for t in probes]
        values = [(x, density(x)) for x, _ in values]
        if target is not None:
            inside = [v for x, v in values if target.contains(x)]
            candidate = inside[0] if inside else {}
            ok = all(v == (candidate if target.contains(x) else {}) for x, v in values)
            if ok:
                report.merged += 1
                for beta, c in candidate.items():
                    _add_into(out, (target, alpha, beta), c)
                continue
        elif drop_zero and all(not v for _, v in values):
            report.dropped += 1
            continue
        if drop_zero and all(not v for _, v in values):
            report.dropped += 1
            continue
        for p in polys:
            if p not in target_set:
                report.auxiliary.append(describe(p))
            for beta, c in members[p].items():
                _add_into(out, (p, alpha, beta), c)
    return out


def is_zero_ae(terms: Mapping) -> bool:
    """True when every (hull, derivative) group has an a.e. vanishing density."""
    groups: dict = {}
    for (f, alpha, beta), c in terms.items():
        groups.setdefault((f.affine_key, alpha), {}).setdefault(f, {})[beta] = c
    for (_, alpha), members in groups.items():
        polys = list(members)
        info = hull_info(polys[0])
        probes = arrangement_probes(_hull_hyperplanes(polys, info), len(info.rows))
        for t in probes:
            x = info.parametrize(t)
            acc: dict = {}
            for p in polys:
                if p.contains(x):
                    for beta, c in members[p].items():
                        _add_into(acc, beta, c)
            if acc:
                return False
    return True


# ---------------------------------------------------------------------- asymptotic series


def guard_order() -> int:
    import os

    try:
        return max(0, int(os.environ.get("ASYMPTHETA_GUARD_ORDER", "1")))
    except ValueError:
        return 1


class AsymptoticSeries:
    """k^s sum_{n=0}^{N} k^{-n} theta_n(k), stored by the exponent s - n."""

    def __init__(self, dim: int, s: int, order: int, by_exponent: Mapping[int, Mapping] | None = None):
        if order < 0:
            raise DistributionError("truncation order must be non-negative")
        self.dim = dim
        self.s = s
        self.order = order
        self.by_exponent: dict[int, RDist] = {}
        for e, terms in (by_exponent or {}).items():
            if s - order <= e <= s:
                rd = terms if isinstance(terms, RDist) else RDist(dim, terms)
                if rd.terms:
                    self.by_exponent[e] = rd
            elif e > s and (terms.terms if isinstance(terms, RDist) else terms):
                raise DistributionError(f"term of order k^{e} above the leading exponent k^{s}")

    def coefficient(self, n: int) -> RDist:
        return self.by_exponent.get(self.s - n, RDist(self.dim))

    @property
    def coefficients(self) -> list[RDist]:
        return [self.coefficient(n) for n in range(self.order + 1)]

    def pair(self, k: int, phi: Poly, window: Window | None = None):
        total = Fraction(0)
        for e, rd in self.by_exponent.items():
            v = rd.pair(k, phi, window)
            if v:
                total = total + v * Fraction(k) ** e
        return simplify_scalar(total)

    def __add__(self, other: "AsymptoticSeries") -> "AsymptoticSeries":
        s = max(self.s, other.s)
        low = max(self.s - self.order, other.s - other.order)
        terms: dict = {}
        for src in (self, other):
            for e, rd in src.by_exponent.items():
                if e >= low:
                    terms[e] = terms[e] + rd if e in terms else rd
        return AsymptoticSeries(self.dim, s, s - low, terms)

    def __neg__(self):
        return AsymptoticSeries(self.dim, self.s, self.order, {e: -rd for e, rd in self.by_exponent.items()})

    def __sub__(self, other):
        return self + (-other)

    def truncate(self, order: int) -> "AsymptoticSeries":
        return AsymptoticSeries(self.dim, self.s, min(order, self.order),
                                {e: rd for e, rd in self.by_exponent.items() if e >= self.s - order})

    def is_structurally_zero(self) -> bool:
        return not self.by_exponent

    def is_zero(self) -> bool:
        """Zero as a distribution at every order (a.e. comparison of densities)."""
        return all(is_zero_ae(rd.terms) for rd in self.by_exponent.values())

    def equals(self, other: "AsymptoticSeries") -> bool:
        low = max(self.s - self.order, other.s - other.order)
        a = self.truncate(self.s - low) if self.s >= low else self
        b = other.truncate(other.s - low) if other.s >= low else other
        return (a - b).is_zero()

    def leading(self) -> tuple[int, RDist]:
        for e in sorted(self.by_exponent, reverse=True):
            rd = self.by_exponent[e]
            if not is_zero_ae(rd.terms):
                return e, rd
        return self.s, RDist(self.dim)

    def format(self) -> str:
        lines = []
        for n in range(self.order + 1):
            e = self.s - n
            rd = self.by_exponent.get(e)
            if rd is None or not rd.terms:
                continue
            lines.append(" + ".join(format_term(key, c, e, self.dim) for key, c in rd.sorted_items()))
        return "\n".join(lines).replace("+ -", "- ") if lines else "0"

    def __repr__(self):
        return f"AsymptoticSeries(s={self.s}, N={self.order}):\n{self.format()}"

    # ------------------------------------------------------------------ transforms
    def translate(self, sigma: Sequence, order: int | None = None) -> "AsymptoticSeries":
        """e^{-D_sigma / k} applied term by term and truncated at the same order."""
        sigma = vec(sigma)
        order = self.order if order is None else order
        low = self.s - order
        raw = []
        for e, rd in self.by_exponent.items():
            for j in range(0, e - low + 1):
                op = Poly(self.dim, multinomial_power([-x for x in sigma], j)) * Fraction(1, math.factorial(j))
                if op.is_zero():
                    continue
                for (f, alpha, beta), c in rd.terms.items():
                    raw.append((e - j, f, op * Poly.monomial(alpha), Poly.monomial(beta), c))
        return AsymptoticSeries(self.dim, self.s, order, assemble(raw, self.dim, low))

    def scale(self, h, order: int | None = None) -> "AsymptoticSeries":
        """Multiply by h(k, k v) for h a quasi-polynomial with characters trivial in lambda.

        h is a QuasiPolynomial; its k-degree raises the leading exponent.
        """
        from .quasipoly import QuasiPolynomial

        if not isinstance(h, QuasiPolynomial):
            raise DistributionError("scale needs a quasi-polynomial")
        if any(any(g) for _, g in h.terms):
            raise DistributionError("scale needs h polynomial in lambda (no lambda characters)")
        deg = h.total_degree
        order = self.order if order is None else order
        new_s = self.s + max(deg, 0)
        low = new_s - order
        out: dict = {}
        for (u, _), p in h.terms.items():
            twist = Periodic(tuple(Cyclotomic.exp2pi(u * r) for r in range(u.denominator)))
            for e, rd in self.by_exponent.items():
                for key, val in multiply_terms(rd.terms, p, self.dim, e, low).items():
                    ee, kk = key
                    _add_into(out.setdefault(ee, {}), kk, val * twist)
        return AsymptoticSeries(self.dim, new_s, order, out)


def assemble(raw: Iterable[tuple], d: int, low: int, targets: Sequence[Polyhedron] = (),
             report: ConsolidationReport | None = None) -> dict[int, dict]:
    """Normal form of raw terms (exponent, Q, operator, density, coefficient), graded by exponent."""
    graded: dict[int, dict] = {}
    for e, q, op, dens, c in raw:
        if e < low:
            continue
        for key, v in normal_form_terms(q, op, dens).items():
            _add_into(graded.setdefault(e, {}), key, _as_periodic(v) * c if not isinstance(c, Periodic) else c * v)
    out = {}
    for e, terms in graded.items():
        faces = list(targets) if targets else sorted({k[0] for k in terms}, key=face_order)
        merged = consolidate(terms, faces, report)
        if merged:
            out[e] = merged
    return out


def multiply_terms(terms: Mapping, p: Poly, d: int, e: int, low: int) -> dict:
    """Multiply normal terms at exponent e by p(k, k v) (p in variables k, lambda).

    Returns {(exponent, key): coefficient}; uses the Leibniz rule for the
    derivative part and restricts the resulting densities to each hull.
    """
    out: dict = {}
    # h(k, k v) = sum_j k^j h_j(v)
    n = p.nvars
    kvar = Poly.var(n, 0)
    images = [kvar] + [kvar * Poly.var(n, i + 1) for i in range(d)]
    full = p.compose(images)
    by_power: dict[int, Poly] = {}
    for ex, c in full.terms.items():
        by_power.setdefault(ex[0], Poly(d))
        by_power[ex[0]] = by_power[ex[0]] + Poly.monomial(ex[1:], c)
    for (f, alpha, beta), c in terms.items():
        info = hull_info(f)
        for j, hj in by_power.items():
            ee = e + j
            if ee < low:
                continue
            for gamma in itertools.product(*[range(a + 1) for a in alpha]):
                dh = hj.partial(gamma)
                if dh.is_zero():
                    continue
                coef = Fraction((-1) ** sum(gamma))
                for a, g in zip(alpha, gamma):
                    coef *= math.comb(a, g)
                dens = restrict_to_hull(dh * Poly.monomial(beta), info)
                rest = tuple(a - g for a, g in zip(alpha, gamma))
                for b2, cb in dens.terms.items():
                    _add_into(out, (ee, (f, rest, b2)), c * (cb * coef))
    return out
