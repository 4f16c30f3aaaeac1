"""Asymptotic expansions A(m; k) of Theta(m; k).

Each piece q [C_{P, sigma}] is split into tangent cones, each cone into signed
simplicial cells (modulo its lineality space), and each cell into lattice
cosets of its generator sublattice.  On a coset the sum factors into 1-D sums
along the generators, each expanded by the twisted Euler-Maclaurin formula;
the product is translated back to the coset and multiplied by the polynomial
weight.  Results are brought into normal form and re-expressed on faces of P.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .bernoulli import zeta_bernoulli
from .distributions import (
    AsymptoticSeries,
    ConsolidationReport,
    DistributionError,
    RDist,
    _add_into,
    assemble,
    consolidate,
    face_order,
    guard_order,
    multiply_terms,
)
from .linalg import coords_in_basis, coset_representatives, dot, hermite_complement, inverse, primitive, saturate
from .piecewise import PiecewiseQP
from .polyhedra import Polyhedron, Vector, tangent_cone_decomposition, triangulate_cone, vec
from .quasipoly import QuasiPolynomial, integrality_progression, qp_polynomial_part, scale_substitute
from .scalars import Cyclotomic, Periodic, Poly, ceil_fraction, frac_part, lcm_all, multinomial_power, to_fraction


class ExpansionError(ValueError):
    pass


# ---------------------------------------------------------------------- 1-D twisted Euler-Maclaurin


@lru_cache(maxsize=None)
def em_coefficient(n: int, s: Fraction, sigma: Fraction, u: Fraction) -> Periodic:
    """Coefficient of k^{1-n} D^{n-1} delta_s (n >= 1) or of k mu_[s, inf) (n = 0).

    The sum over j >= k s + sigma of zeta^j delta_{j/k} has these coefficients,
    zeta = exp(2 pi i u).  They are periodic in k with period den(s) * ord(zeta).
    """
    if n == 0:
        return Periodic.const(1 if u == 0 else 0)
    bern = zeta_bernoulli(n, u)
    period = s.denominator * u.denominator
    sign = Fraction((-1) ** n, math.factorial(n))
    table = []
    for r in range(period):
        arg = frac_part(-r * s - sigma) + sigma
        phase = Cyclotomic.exp2pi(u * ceil_fraction(r * s + sigma))
        table.append(phase * bern.evaluate([arg]) * sign)
    return Periodic(table)


def euler_maclaurin_1d(s, sigma, zeta_u, order: int) -> AsymptoticSeries:
    """Expansion of sum_{j >= k s + sigma} zeta^j delta_{j/k} through k^{1 - order}."""
    if order < 0:
        raise ExpansionError("truncation order must be non-negative")
    s, sigma, u = to_fraction(s), to_fraction(sigma), frac_part(to_fraction(zeta_u))
    terms: dict[int, dict] = {}
    half_line = Polyhedron.interval(s, None)
    point = Polyhedron.point((s,))
    for n in range(order + 1):
        c = em_coefficient(n, s, sigma, u)
        if not c:
            continue
        key = (half_line, (0,), (0,)) if n == 0 else (point, (n - 1,), (0,))
        terms.setdefault(1 - n, {})[key] = c
    return AsymptoticSeries(1, 1, order, terms)


# ---------------------------------------------------------------------- cells


def _phase(u: Fraction) -> Periodic:
    return Periodic(tuple(Cyclotomic.exp2pi(u * r) for r in range(u.denominator)))


@lru_cache(maxsize=None)
def _support(apex: Vector, rays: tuple, lines: tuple) -> Polyhedron:
    return Polyhedron.from_generators([apex], list(rays), list(lines), len(apex))


@lru_cache(maxsize=None)
def _index_in_hull(gens: tuple, d: int) -> int:
    if not gens:
        return 1
    basis = saturate(list(gens), d)
    coords = [coords_in_basis(basis, g) for g in gens]
    from .linalg import det

    return abs(int(det(coords)))


def _translation_ops(tau: Vector, max_order: int, d: int) -> list[Poly]:
    """Operators (-D_tau)^j / j! for j = 0..max_order."""
    out = []
    neg = [-x for x in tau]
    for j in range(max_order + 1):
        out.append(Poly(d, multinomial_power(neg, j)) * Fraction(1, math.factorial(j)))
    return out


def cell_raw_terms(apex: Vector, sigma: Vector, lines: Sequence[tuple[int, ...]], rays: Sequence[tuple[int, ...]],
                   g: Sequence[Fraction], low: int) -> list[tuple]:
    """Raw terms (exponent, support, operator, density, coefficient) for g [C_{cell, sigma}].

    The cell is apex + span(lines) + cone(rays) with primitive integral lines
    and rays, linearly independent together.  Only exponents >= low are kept.
    """
    d = len(apex)
    gens = [tuple(int(x) for x in v) for v in list(lines) + list(rays)]
    nl = len(lines)
    w = len(gens)
    # a line along which g is nontrivial contributes nothing
    for b in lines:
        if frac_part(dot(g, b)):
            return []
    basis_w = saturate(gens, d) if gens else []
    basis_r = hermite_complement(basis_w, d) if w < d else []
    full = [tuple(v) for v in basis_w] + [tuple(v) for v in basis_r]
    c_apex = coords_in_basis(full, apex)
    c_sigma = coords_in_basis(full, sigma)
    y_s, z_s = c_apex[:w], c_apex[w:]
    y_sig, z_sig = c_sigma[:w], c_sigma[w:]
    prog = integrality_progression(z_s, z_sig)
    if prog.empty:
        return []
    # k-periodic factor: [I](k) g^{lambda_R(k)}, lambda_R = B_R (k z_s + z_sigma)
    r_slope = tuple(sum((z * b[i] for z, b in zip(z_s, basis_r)), Fraction(0)) for i in range(d))
    r_offset = tuple(sum((z * b[i] for z, b in zip(z_sig, basis_r)), Fraction(0)) for i in range(d))
    c1, c0 = dot(g, r_slope), dot(g, r_offset)
    period = lcm_all([prog.modulus, c1.denominator])
    outer = Periodic(tuple(Cyclotomic.exp2pi(c1 * r + c0) if prog.contains(r) else Fraction(0)
                           for r in range(period)))
    if not outer:
        return []
    # generator coordinates in the basis of the saturated lattice
    gmat = [[int(x) for x in coords_in_basis(basis_w, v)] for v in gens] if gens else []
    ginv = inverse([[Fraction(x) for x in col] for col in zip(*gmat)]) if gens else []
    t1 = [sum((ginv[i][j] * y_s[j] for j in range(w)), Fraction(0)) for i in range(w)]
    t0 = [sum((ginv[i][j] * y_sig[j] for j in range(w)), Fraction(0)) for i in range(w)]
    u = [frac_part(dot(g, v)) for v in gens]
    top = w - low  # exponents of products lie in [w - sum n_j - i, w]
    if top < 0:
        return []
    out = []
    cosets = coset_representatives(gmat) if gens else [()]
    for delta in cosets:
        point = tuple(sum((delta[j] * gens[j][i] for j in range(w)), Fraction(0)) for i in range(d))
        phase = Cyclotomic.exp2pi(dot(g, point))
        tau = tuple(sum((delta[j] * gens[j][i] for j in range(nl, w)), Fraction(0)) + r_offset[i] for i in range(d))
        trans = _translation_ops(tau, top, d)
        # per-axis coefficient lists: index n -> Periodic
        axes = []
        for j in range(nl, w):
            sj, sgj = t1[j], t0[j] - delta[j]
            axes.append([em_coefficient(n, sj, sgj, u[j]) for n in range(top + 1)])
        base_coef = outer * phase
        for orders in _bounded_tuples(len(axes), top):
            coef = base_coef
            for ax, n in zip(axes, orders):
                coef = coef * ax[n]
                if not coef:
                    break
            if not coef:
                continue
            measure_rays = tuple(gens[nl + j] for j, n in enumerate(orders) if n == 0)
            q = _support(tuple(apex), measure_rays, tuple(tuple(b) for b in lines))
            ind = _index_in_hull(tuple(tuple(b) for b in lines) + measure_rays, d)
            op = Poly.const(d, Fraction(1, ind))
            for j, n in enumerate(orders):
                if n >= 2:
                    op = op * Poly(d, multinomial_power(gens[nl + j], n - 1))
            e = nl + sum(1 - n for n in orders)
            for i in range(0, e - low + 1):
                if trans[i].is_zero():
                    continue
                out.append((e - i, q, op * trans[i], Poly.const(d, Fraction(1)), coef))
    return out


def _bounded_tuples(n: int, total: int):
    if n == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _bounded_tuples(n - 1, total - first):
            yield (first,) + rest


# ---------------------------------------------------------------------- cones


def cone_cells(cone: Polyhedron) -> tuple[Vector, list[tuple[int, ...]], list[tuple[int, tuple[tuple[int, ...], ...]]]]:
    """Apex point, primitive lattice basis of the lineality space, and signed simplicial cells.

    Rays are taken in a lattice complement of the lineality space so that each
    cell is apex + span(lines) + cone(rays) with independent generators.
    """
    d = cone.d
    apex = cone.vertices[0]
    lines = [tuple(v) for v in saturate(cone.lineality, d)] if cone.lineality else []
    comp = hermite_complement(lines, d) if lines else [tuple(1 if i == j else 0 for i in range(d)) for j in range(d)]
    full = lines + [tuple(v) for v in comp]
    rays = []
    for r in cone.rays:
        c = coords_in_basis(full, r)
        proj = [sum((c[len(lines) + j] * comp[j][i] for j in range(len(comp))), Fraction(0)) for i in range(d)]
        if any(proj):
            rays.append(tuple(primitive(proj)))
    rays = sorted(set(rays))
    cells = []
    for sign, cell in triangulate_cone(rays) if rays else [(1, ())]:
        cells.append((sign, tuple(rays[i] for i in cell)))
    return apex, lines, cells


def _piece_cones(p: Polyhedron) -> list[tuple[int, Polyhedron]]:
    return tangent_cone_decomposition(p)


def declared_exponent(m: PiecewiseQP) -> int:
    best = None
    for q, cone in m.pieces:
        e = cone.base.dim + max(q.total_degree, 0)
        best = e if best is None else max(best, e)
    return 0 if best is None else best


# ---------------------------------------------------------------------- affine subspaces


def expand_affine_exact(a: Polyhedron, sigma: Sequence, q: QuasiPolynomial, order: int | None = None,
                        s: int | None = None) -> AsymptoticSeries:
    """Exact expansion of q [C_{A, sigma}] for an affine subspace A (given as a polyhedron)."""
    if not a.is_affine_subspace():
        raise ExpansionError("expand_affine_exact needs an affine subspace")
    d = a.d
    sigma = vec(sigma)
    lead = a.dim + max(q.total_degree, 0)
    s = lead if s is None else s
    order = (s + 20) if order is None else order
    low = s - order
    raw = _affine_raw(a, sigma, q, low)
    graded = assemble(raw, d, low, [a])
    return AsymptoticSeries(d, s, order, graded)


def _affine_raw(a: Polyhedron, sigma: Vector, q: QuasiPolynomial, low: int) -> list[tuple]:
    d = a.d
    part = qp_polynomial_part(q, a.affine_point, a.lin_basis, sigma)
    if part.progression.empty or part.poly.is_zero():
        return []
    polys = scale_substitute(part.poly, sigma)
    raw = []
    for j, pj in enumerate(polys):
        if pj.is_zero():
            continue
        e0 = a.dim + j
        if e0 < low:
            continue
        ops = _translation_ops(sigma, e0 - low, d)
        for i, op in enumerate(ops):
            if op.is_zero():
                continue
            raw.append((e0 - i, a, op, pj, Fraction(1)))
    return raw


# ---------------------------------------------------------------------- master expansion


def _group_by_character(q: QuasiPolynomial) -> dict[tuple, list[tuple[Fraction, Poly]]]:
    out: dict = {}
    for (u, g), p in q.terms.items():
        out.setdefault(g, []).append((u, p))
    return out


def expand_piece(q: QuasiPolynomial, base: Polyhedron, sigma: Vector, low: int,
                 report: ConsolidationReport | None = None) -> dict[int, dict]:
    """Graded normal-form terms of A(q [C_{base, sigma}]) with exponents >= low."""
    d = base.d
    if base.is_affine_subspace():
        return assemble(_affine_raw(base, sigma, q, low), d, low, [base], report)
    targets = [f.polyhedron for f in base.faces]
    cones = _piece_cones(base)
    out: dict[int, dict] = {}
    for g, weights in _group_by_character(q).items():
        deg = max(p.total_degree() for _, p in weights)
        low_g = low - max(deg, 0)
        raw = []
        for sign, cone in cones:
            apex, lines, cells = cone_cells(cone)
            for csign, rays in cells:
                for e, sup, op, dens, coef in cell_raw_terms(apex, sigma, lines, rays, g, low_g):
                    raw.append((e, sup, op, dens, coef * (sign * csign)))
        graded = assemble(raw, d, low_g, targets, report)
        for e, terms in graded.items():
            for u, p in weights:
                twist = _phase(u)
                for (ee, key), val in multiply_terms(terms, p, d, e, low).items():
                    _add_into(out.setdefault(ee, {}), key, val * twist)
    return {e: t for e, t in out.items() if t}


def expand(m: PiecewiseQP, order: int, report: ConsolidationReport | None = None,
           warn: bool = True) -> AsymptoticSeries:
    """A(m; k) through k^{s - order}, s the declared leading exponent."""
    if order < 0:
        raise ExpansionError("truncation order must be non-negative")
    d = m.dim
    s = declared_exponent(m)
    low = s - order
    guard = guard_order()
    report = report if report is not None else ConsolidationReport()
    total: dict[int, dict] = {}
    targets = []
    for q, cone in m.pieces:
        targets.extend(f.polyhedron for f in cone.base.faces)
        for e, terms in expand_piece(q, cone.base, cone.shift, low - guard, report).items():
            if e < low:
                continue
            bucket = total.setdefault(e, {})
            for key, val in terms.items():
                _add_into(bucket, key, val)
    uniq = sorted(set(targets), key=face_order)
    final = {}
    for e, terms in total.items():
        merged = consolidate(terms, uniq, report)
        if merged:
            final[e] = merged
    if warn and report.auxiliary:
        import warnings

        from .distributions import AuxiliaryFaceWarning

        warnings.warn(f"terms left on auxiliary supports: {sorted(set(report.auxiliary))}", AuxiliaryFaceWarning)
    return AsymptoticSeries(d, s, order, final)


def leading_term(m: PiecewiseQP, max_depth: int | None = None) -> tuple[int | None, RDist]:
    """(s, theta_0) for the first non-vanishing order of A(m)."""
    s = declared_exponent(m)
    depth = max_depth if max_depth is not None else s + m.dim + 2
    series = expand(m, max(depth, 0))
    for n in range(series.order + 1):
        coeff = series.coefficient(n)
        from .distributions import is_zero_ae

        if coeff.terms and not is_zero_ae(coeff.terms):
            return s - n, coeff
    return None, RDist(m.dim)


def series_transform(series: AsymptoticSeries, translate: Sequence | None = None,
                     scale: QuasiPolynomial | None = None) -> AsymptoticSeries:
    """Apply e^{-D_sigma / k} and/or multiplication by h(k, k v)."""
    out = series
    if scale is not None:
        out = out.scale(scale)
    if translate is not None:
        out = out.translate(translate)
    return out
