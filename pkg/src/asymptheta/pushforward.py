"""Pushforward of piecewise quasi-polynomials along rational linear quotient maps.

pi_* m (k, lambda') is the sum of m(k, lambda) over the lattice points lambda with
pi(lambda) = lambda'.  Image points are written in coordinates of a fixed basis of
the image lattice pi(Z^d), so pushed functions live on Z^{d'}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .distributions import AsymptoticSeries, ThetaSample, Window, _sorted_atoms
from .linalg import column_hermite, inverse, matmul, rank
from .polyhedra import Polyhedron, enumerate_lattice_points, vec
from .piecewise import PiecewiseQP, ShiftedCone
from .quasipoly import QuasiPolynomial, qp_character_decompose
from .scalars import Poly, ceil_fraction, lcm_all, simplify_scalar, to_fraction


class PushforwardError(ValueError):
    pass


class ReconstructionError(PushforwardError):
    """Interpolated chamber data failed verification; carries the offending point."""

    def __init__(self, message: str, point: tuple | None = None):
        super().__init__(message if point is None else f"{message} at (k, lambda') = {point}")
        self.point = point


# ---------------------------------------------------------------------- quotient maps


@dataclass(frozen=True)
class QuotientMap:
    """A rational linear surjection R^d -> R^{d'} of full row rank.

    image_basis holds (as columns) a basis of pi(Z^d); coords = B^{-1} pi is the
    integer matrix sending Z^d onto Z^{d'} in those coordinates.
    """

    matrix: tuple[tuple[Fraction, ...], ...]
    image_basis: tuple[tuple[Fraction, ...], ...]
    coords: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(matrix: Sequence[Sequence], image_basis: Sequence[Sequence] | None = None) -> "QuotientMap":
        mat = [list(vec(r)) for r in matrix]
        if not mat or not mat[0]:
            raise PushforwardError("quotient map needs a nonempty matrix")
        d = len(mat[0])
        if any(len(r) != d for r in mat):
            raise PushforwardError("ragged quotient matrix")
        if rank(mat) != len(mat):
            raise PushforwardError("quotient map must have full row rank")
        den = lcm_all([x.denominator for r in mat for x in r] + [1])
        h, _ = column_hermite([[int(x * den) for x in r] for r in mat])
        basis = [[Fraction(h[i][j], den) for j in range(len(mat))] for i in range(len(mat))]
        if image_basis is not None:
            given = [list(vec(r)) for r in image_basis]
            if len(given) != len(mat) or any(len(r) != len(mat) for r in given) or rank(given) != len(mat):
                raise PushforwardError("image basis must be a square invertible matrix")
            # same lattice iff both change-of-basis matrices are integral
            for a, b in ((given, basis), (basis, given)):
                if any(x.denominator != 1 for r in matmul(inverse(a), b) for x in r):
                    raise PushforwardError("image basis does not generate the image lattice")
            basis = given
        cmat = matmul(inverse(basis), mat)
        if any(x.denominator != 1 for r in cmat for x in r):
            raise PushforwardError("internal error: image coordinates are not integral")
        return QuotientMap(tuple(tuple(r) for r in mat), tuple(tuple(r) for r in basis),
                           tuple(tuple(int(x) for x in r) for r in cmat))

    @staticmethod
    def identity(d: int) -> "QuotientMap":
        return QuotientMap.of([[int(i == j) for j in range(d)] for i in range(d)])

    @property
    def source_dim(self) -> int:
        return len(self.matrix[0])

    @property
    def target_dim(self) -> int:
        return len(self.matrix)

    def apply(self, x: Sequence) -> tuple:
        """Image of x in image-lattice coordinates."""
        return tuple(sum((c * to_fraction(v) for c, v in zip(row, x)), Fraction(0)) for row in self.coords)

    def apply_int(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(c * v for c, v in zip(row, x)) for row in self.coords)

    def pullback(self, phi: Poly) -> Poly:
        """phi o pi for a polynomial phi on the image coordinates."""
        if phi.nvars != self.target_dim:
            raise PushforwardError("test function dimension does not match the target")
        d = self.source_dim
        images = [Poly(d, {tuple(int(i == j) for i in range(d)): Fraction(row[j]) for j in range(d) if row[j]})
                  for row in self.coords]
        return phi.compose(images)

    def to_json(self) -> dict:
        from .scalars import format_fraction

        return {"matrix": [[format_fraction(x) for x in r] for r in self.matrix],
                "image_basis": [[format_fraction(x) for x in r] for r in self.image_basis]}


# ---------------------------------------------------------------------- properness


@dataclass
class ProperCertificate:
    proper: bool
    violations: list[tuple[int, tuple]] = field(default_factory=list)  # (piece index, ray)

    def __bool__(self):
        return self.proper


def properness_check(m: PiecewiseQP, pi: QuotientMap) -> ProperCertificate:
    """pi is proper on the support iff no recession cone meets ker pi away from 0."""
    if m.dim != pi.source_dim:
        raise PushforwardError("dimension mismatch between function and map")
    bad = []
    for idx, (_, cone) in enumerate(m.pieces):
        rows = [(a, Fraction(0)) for a, _ in cone.base.rows]
        for r in pi.coords:
            rows.append((vec(r), Fraction(0)))
            rows.append((vec(-x for x in r), Fraction(0)))
        meet = Polyhedron(rows, m.dim)
        for g in list(meet.rays) + list(meet.lineality):
            bad.append((idx, tuple(g)))
    return ProperCertificate(not bad, bad)


def _require_proper(m: PiecewiseQP, pi: QuotientMap):
    cert = properness_check(m, pi)
    if not cert:
        idx, ray = cert.violations[0]
        raise PushforwardError(f"map is not proper on the support: piece {idx} recedes along {ray} inside the kernel")


def _image_constraints(pi: QuotientMap, lo: Sequence[int], hi: Sequence[int]) -> list[tuple]:
    rows = []
    for r, a, b in zip(pi.coords, lo, hi):
        rows.append((vec(r), Fraction(a)))
        rows.append((vec(-x for x in r), Fraction(-b)))
    return rows


def push_eval(m: PiecewiseQP, pi: QuotientMap, k: int, lam: Sequence[int]):
    """Exact fiber sum of m(k, .) over pi^{-1}(lam)."""
    _require_proper(m, pi)
    lam = [int(x) for x in lam]
    if len(lam) != pi.target_dim:
        raise PushforwardError("image point has the wrong dimension")
    total = Fraction(0)
    for q, cone in m.pieces:
        fiber = Polyhedron(list(cone.slice(k).rows) + _image_constraints(pi, lam, lam), m.dim)
        for x in enumerate_lattice_points(fiber):
            total = total + q.evaluate(k, x)
    return simplify_scalar(total)


def push_level(m: PiecewiseQP, pi: QuotientMap, k: int, lo: Sequence[int], hi: Sequence[int]) -> dict:
    """All nonzero pushed values at level k with image coordinates in the box [lo, hi]."""
    _require_proper(m, pi)
    box = _image_constraints(pi, lo, hi)
    out: dict = {}
    for q, cone in m.pieces:
        region = Polyhedron(list(cone.slice(k).rows) + box, m.dim)
        for x in enumerate_lattice_points(region):
            y = pi.apply_int(x)
            w = q.evaluate(k, x)
            out[y] = out[y] + w if y in out else w
    return {y: simplify_scalar(w) for y, w in out.items() if w}


def push_theta(m: PiecewiseQP, pi: QuotientMap, k: int, window: Window, verify: bool = True) -> ThetaSample:
    """Theta(pi_* m; k) on a window, by projecting atoms of Theta(m; k).

    With verify, every image lattice point of the window is also evaluated by a
    direct fiber sum and both paths must agree.
    """
    if window.dim != pi.target_dim:
        raise PushforwardError("window dimension does not match the target")
    if k <= 0:
        raise PushforwardError("k must be positive")
    lo, hi = window.integer_ranges(k)
    if any(a > b for a, b in zip(lo, hi)):
        return ThetaSample(k, window, [])
    level = push_level(m, pi, k, lo, hi)
    weights = {}
    for y, w in level.items():
        x = tuple(Fraction(v, k) for v in y)
        if window.contains(x):
            weights[x] = w
    if verify:
        for y in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            x = tuple(Fraction(v, k) for v in y)
            if not window.contains(x):
                continue
            direct = push_eval(m, pi, k, y)
            if direct != weights.get(x, 0):
                raise ReconstructionError("projected atoms disagree with fiber sums", (k, y))
    return ThetaSample(k, window, _sorted_atoms(weights))


def push_series_pair(series: AsymptoticSeries, pi: QuotientMap, k: int, phi: Poly):
    """<pi_* A, phi> computed as <A, phi o pi>."""
    for rd in series.by_exponent.values():
        for f in rd.faces():
            if not f.is_bounded():
                raise PushforwardError("series has an unbounded face; the pushforward pairing needs compact faces")
    return series.pair(k, pi.pullback(phi))


# ---------------------------------------------------------------------- chamber reconstruction


def _shift_groups(m: PiecewiseQP, pi: QuotientMap) -> dict[tuple, PiecewiseQP]:
    groups: dict[tuple, list] = {}
    for q, cone in m.pieces:
        groups.setdefault(pi.apply(cone.shift), []).append((q, cone))
    return {s: PiecewiseQP(m.dim, ps) for s, ps in sorted(groups.items())}


def line_chambers(m: PiecewiseQP, pi: QuotientMap) -> list[Polyhedron]:
    """Closed intervals between consecutive projected vertices, for a 1-dimensional target."""
    if pi.target_dim != 1:
        raise PushforwardError("automatic chambers need a 1-dimensional target; pass chambers explicitly")
    pts, up, down = set(), False, False
    for _, cone in m.pieces:
        for v in cone.base.vertices:
            pts.add(pi.apply(v)[0])
        for r in cone.base.rays:
            t = pi.apply(r)[0]
            up, down = up or t > 0, down or t < 0
        for r in cone.base.lineality:
            if pi.apply(r)[0] != 0:
                up = down = True
    bp = sorted(pts)
    if not bp:
        return [Polyhedron.whole_space(1)] if (up or down) else []
    out = [Polyhedron.interval(a, b) for a, b in zip(bp, bp[1:])]
    if down:
        out.insert(0, Polyhedron([((Fraction(-1),), -bp[0])], 1))
    if up:
        out.append(Polyhedron([((Fraction(1),), bp[-1])], 1))
    if not out:
        out = [Polyhedron.point([bp[0]])]
    return out


def _cells(chambers: Sequence[Polyhedron]) -> list[Polyhedron]:
    """Chambers and all their faces, deduplicated, by decreasing dimension."""
    seen = {}
    for c in chambers:
        for f in c.faces:
            seen.setdefault(f.polyhedron.key, f.polyhedron)
    return sorted(seen.values(), key=lambda p: (-p.dim, repr(p.key)))


def _in_relint(q: Polyhedron, x: Sequence) -> bool:
    if not q.contains(x):
        return False
    eq = q.implicit_equalities()
    return all(i in eq or sum((a * b for a, b in zip(q.rows[i][0], x)), Fraction(0)) > q.rows[i][1]
               for i in range(len(q.rows)))


def _fiber_vertex_dets(base: Polyhedron, rows: Sequence[Sequence[int]], pi: QuotientMap) -> list[int]:
    """Determinants of the linear systems whose solutions are fiber-polytope vertices.

    A fiber vertex lies on a face F of dimension <= d' on which pi is injective and is
    the unique solution of every nonsingular choice of d - d' tight rows of F together
    with pi.  Its denominator therefore divides the gcd of those determinants.
    """
    d, e = pi.source_dim, pi.target_dim
    out = set()
    for f in base.faces:
        if f.dim > e:
            continue
        dirs = [pi.apply(v) for v in f.polyhedron.lin_basis]
        if dirs and rank(dirs) < f.dim:
            continue
        g = 0
        for sub in itertools.combinations(sorted(f.tight), d - e):
            g = math.gcd(g, _int_det([list(rows[i]) for i in sub] + [list(r) for r in pi.coords]))
        if g:
            out.add(g)
    return sorted(out)


def _int_det(mat) -> int:
    from .linalg import det

    return int(det(mat))


def _piece_period(q: QuasiPolynomial, cone: ShiftedCone, pi: QuotientMap) -> int:
    """Fiber points solve systems of determinant D, so a character of order r on
    them has order dividing r * D in the image coordinates."""
    rows, dens = [], list(q.denominators()) + [x.denominator for x in cone.shift]
    for a, b in cone.base.rows:
        den = lcm_all([x.denominator for x in a] + [1])
        rows.append([int(x * den) for x in a])
        dens.append((b * den).denominator)
    return lcm_all(dens + [1]) * lcm_all(_fiber_vertex_dets(cone.base, rows, pi) + [1])


def _period_bound(m: PiecewiseQP, pi: QuotientMap, cells: Sequence[Polyhedron], shift: tuple) -> int:
    dens = [_piece_period(q, cone, pi) for q, cone in m.pieces]
    dens += [x.denominator for x in shift]
    for c in cells:
        for v in c.vertices:
            dens += [x.denominator for x in v]
        for r in c.lin_basis:
            dens += [x.denominator for x in r]
    return lcm_all(dens + [1])


def _degree_bound(m: PiecewiseQP, pi: QuotientMap) -> int:
    out = 0
    for q, cone in m.pieces:
        img = [pi.apply(v) for v in cone.base.vertices]
        dirs = [pi.apply(r) for r in list(cone.base.rays) + list(cone.base.lineality)]
        vecs = [tuple(a - b for a, b in zip(v, img[0])) for v in img[1:]] + dirs if img else dirs
        img_dim = rank(vecs) if vecs else 0
        out = max(out, q.total_degree + cone.base.dim - img_dim)
    return out


def _monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    return [e for e in itertools.product(range(degree + 1), repeat=nvars) if sum(e) <= degree]


class _Fitter:
    """Samples and interpolates pi_* m restricted to the cone over one cell."""

    def __init__(self, cell: Polyhedron, shift: tuple, degree: int, period: int):
        self.cell = cell
        self.shift = shift
        self.pivots = [next(i for i, v in enumerate(r) if v) for r in cell.lin_basis]
        self.degree = degree
        self.period = period
        self.monos = _monomials(1 + len(self.pivots), degree)

    def coords(self, k: int, y: Sequence[int]) -> tuple[int, ...]:
        return (k,) + tuple(y[i] for i in self.pivots)

    def contains(self, k: int, y: Sequence[int]) -> bool:
        return _in_relint(self.cell, [(Fraction(v) - s) / k for v, s in zip(y, self.shift)])

    def fit(self, samples: Sequence[tuple[int, tuple, object]]) -> dict | None:
        """Per residue class polynomials from samples (k, y, value); None if underdetermined."""
        classes: dict[tuple, list] = {}
        for k, y, w in samples:
            t = self.coords(k, y)
            classes.setdefault(tuple(x % self.period for x in t), []).append((t, w))
        out = {}
        n = len(self.monos)
        for cls, pts in classes.items():
            chosen, rows = [], []
            for t, w in pts:
                row = [math.prod(Fraction(x) ** a for x, a in zip(t, mono)) for mono in self.monos]
                if rank(rows + [row]) > len(rows):
                    rows.append(row)
                    chosen.append(w)
                if len(rows) == n:
                    break
            if len(rows) < n:
                return None
            coeffs = _solve_scalar(rows, chosen)
            if coeffs is None:
                raise ReconstructionError("interpolation system is inconsistent")
            terms = {mono: c for mono, c in zip(self.monos, coeffs) if c}
            out[cls] = Poly(1 + len(self.pivots), terms)
        return out

    def to_qp(self, target_dim: int, polys: dict) -> QuasiPolynomial:
        e = len(self.pivots)
        sub = [[self.period * int(i == j) for j in range(e + 1)] for i in range(e + 1)]
        local = qp_character_decompose(e, sub, polys) if polys else QuasiPolynomial.zero(e)
        n = target_dim + 1
        images = [Poly.var(n, 0)] + [Poly.var(n, p + 1) for p in self.pivots]
        terms = {}
        for (u, g), p in local.terms.items():
            g2 = [Fraction(0)] * target_dim
            for gi, piv in zip(g, self.pivots):
                g2[piv] = gi
            key = (u, tuple(g2))
            terms[key] = terms[key] + p.compose(images) if key in terms else p.compose(images)
        return QuasiPolynomial(target_dim, terms)


def _solve_scalar(rows, values):
    """Solve a square system whose right-hand side may be cyclotomic."""
    inv = inverse(rows)
    return [simplify_scalar(sum((c * v for c, v in zip(r, values)), Fraction(0))) for r in inv]


def push_reconstruct(m: PiecewiseQP, pi: QuotientMap, chambers: Sequence[Polyhedron] | None = None,
                     degree: int | None = None, period: int | None = None,
                     verify_levels: int | None = None) -> PiecewiseQP:
    """pi_* m as a PiecewiseQP on Z^{d'}, fitted on the cones over chambers and their faces.

    Each cell is fitted by exact interpolation against the residual left by larger
    cells, then checked on a disjoint range of larger k.  A mismatch raises
    ReconstructionError with the offending point.
    """
    _require_proper(m, pi)
    e = pi.target_dim
    out = []
    deg = _degree_bound(m, pi) if degree is None else degree
    for shift, group in _shift_groups(m, pi).items():
        chs = list(chambers) if chambers is not None else line_chambers(group, pi)
        cells = _cells(chs)
        per = _period_bound(group, pi, cells, shift) if period is None else period
        out.extend(_reconstruct_group(group, pi, cells, shift, deg, per, verify_levels))
    return PiecewiseQP(e, out)


def _level_box(cells: Sequence[Polyhedron], shift: tuple, k: int, radius: Fraction) -> tuple[list, list]:
    e = len(shift)
    lo, hi = [None] * e, [None] * e
    for c in cells:
        if c.is_bounded():
            a, b = c.bounding_box()
        else:
            box = Polyhedron.box([-radius] * e, [radius] * e)
            a, b = c.intersect(box).bounding_box()
        for i in range(e):
            x, y = a[i] * k + shift[i], b[i] * k + shift[i]
            lo[i] = x if lo[i] is None else min(lo[i], x)
            hi[i] = y if hi[i] is None else max(hi[i], y)
    return [ceil_fraction(x) for x in lo], [math.floor(x) for x in hi]


def _reconstruct_group(m, pi, cells, shift, deg, per, verify_levels):
    if not cells:
        return []
    radius = Fraction(2)
    for c in cells:
        for v in c.vertices:
            radius = max(radius, max(abs(x) for x in v) + 2)
    cache: dict[int, dict] = {}

    def level(k):
        if k not in cache:
            lo, hi = _level_box(cells, shift, k, radius)
            cache[k] = push_level(m, pi, k, lo, hi)
        return cache[k]

    fitted: list[tuple[QuasiPolynomial, ShiftedCone]] = []

    def residual(k, y):
        w = level(k).get(tuple(y), 0)
        for q, cone in fitted:
            if cone.contains(k, y):
                w = w - q.evaluate(k, y)
        return simplify_scalar(w)

    def cell_points(cell, k):
        lo, hi = _level_box([cell], shift, k, radius)
        return enumerate_lattice_points(Polyhedron.box(lo, hi).intersect(cell.scale(k).translate(shift)))

    e = pi.target_dim
    for cell in cells:
        fitter = _Fitter(cell, shift, deg, per)
        need = len(fitter.monos) + 2
        k_fit = per * (deg + 2)
        samples = []
        polys = None
        k = 0
        cap = per * (deg + 2) * 8 + 8
        while k < cap:
            k += 1
            for y in cell_points(cell, k):
                if fitter.contains(k, y):
                    samples.append((k, y, residual(k, y)))
            if k >= k_fit:
                counts: dict = {}
                for kk, y, _ in samples:
                    cls = tuple(x % per for x in fitter.coords(kk, y))
                    counts[cls] = counts.get(cls, 0) + 1
                if all(c >= need for c in counts.values()):
                    polys = fitter.fit(samples)
                    if polys is not None:
                        break
        if polys is None:
            polys = fitter.fit(samples)
            if polys is None:
                raise ReconstructionError(f"not enough samples to determine the fit on cell {cell!r}")
        q = fitter.to_qp(e, polys)
        # certify on all samples used and on a disjoint range of larger k
        extra = verify_levels if verify_levels is not None else per * (deg + 1) + 2
        check = list(samples)
        for kk in range(k + 1, k + 1 + extra):
            for y in cell_points(cell, kk):
                if fitter.contains(kk, y):
                    check.append((kk, y, residual(kk, y)))
        for kk, y, w in check:
            if q.evaluate(kk, y) != w:
                raise ReconstructionError("chamber fit does not reproduce the pushforward", (kk, tuple(y)))
        if not q.is_zero():
            fitted.append((q, ShiftedCone.of(cell, shift)))
    return fitted


__all__ = [
    "PushforwardError", "ReconstructionError", "QuotientMap", "ProperCertificate", "properness_check",
    "push_eval", "push_level", "push_theta", "push_series_pair", "line_chambers", "push_reconstruct",
]
