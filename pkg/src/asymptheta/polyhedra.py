"""Rational polyhedra, cones and lattice-normalized measures.

A polyhedron is stored as inequalities <a, x> >= c.  Generators (minimal face
points, extreme rays, lineality basis) and the face lattice are computed on
demand by exhaustive rank analysis of inequality subsets, which is exact and
fast enough in the small dimensions this package targets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, cached_property
from typing import Iterable, Sequence

from . import _kernels
from .linalg import (
    LatticeError,
    coords_in_basis,
    coset_representatives,
    det,
    dot,
    hermite_complement,
    lattice_index,
    nullspace,
    primitive,
    rank,
    rref,
    saturate,
    solve,
    transpose,
)
from .scalars import Poly, ceil_fraction, to_fraction

Vector = tuple[Fraction, ...]


class PolyhedronError(ValueError):
    pass


def vec(x: Iterable) -> Vector:
    return tuple(to_fraction(v) if not isinstance(v, Fraction) else v for v in x)


def _normalize_row(a: Sequence[Fraction], c: Fraction) -> tuple[Vector, Fraction] | None:
    if not any(a):
        return None
    den = 1
    for x in list(a) + [c]:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in a]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    scale = Fraction(den, g)
    return tuple(Fraction(x) * scale for x in a), c * scale


@dataclass(frozen=True)
class Face:
    """A nonempty face of a polyhedron, identified by its set of tight inequalities."""

    tight: frozenset
    polyhedron: "Polyhedron"

    @property
    def dim(self) -> int:
        return self.polyhedron.dim


class Polyhedron:
    """{x : <a_i, x> >= c_i for all i}."""

    def __init__(self, ineqs: Iterable[tuple[Sequence, object]], dim: int | None = None):
        rows = []
        infeasible = False
        for a, c in ineqs:
            a, c = vec(a), to_fraction(c)
            if dim is None:
                dim = len(a)
            elif len(a) != dim:
                raise PolyhedronError("inequality dimension mismatch")
            norm = _normalize_row(a, c)
            if norm is None:
                if c > 0:
                    infeasible = True
                continue
            if norm not in rows:
                rows.append(norm)
        if dim is None:
            raise PolyhedronError("dimension required for a polyhedron without inequalities")
        self.d = dim
        if infeasible:
            rows = [(tuple(Fraction(int(i == 0)) for i in range(dim)), Fraction(1)),
                    (tuple(Fraction(-int(i == 0)) for i in range(dim)), Fraction(0))] if dim else []
            self._forced_empty = True
        else:
            self._forced_empty = False
        self.rows: tuple[tuple[Vector, Fraction], ...] = tuple(sorted(rows))
        self._gens = None

    # ------------------------------------------------------------------ builders
    @staticmethod
    def whole_space(d: int) -> "Polyhedron":
        return Polyhedron([], d)

    @staticmethod
    def empty(d: int) -> "Polyhedron":
        p = Polyhedron([((0,) * d, 1)], d) if d else Polyhedron([], 0)
        if not d:
            p._forced_empty = True
        return p

    @staticmethod
    def point(p: Sequence) -> "Polyhedron":
        p = vec(p)
        d = len(p)
        rows = []
        for i in range(d):
            e = tuple(Fraction(int(i == j)) for j in range(d))
            rows.append((e, p[i]))
            rows.append((tuple(-x for x in e), -p[i]))
        return Polyhedron(rows, d)

    @staticmethod
    def box(lo: Sequence, hi: Sequence) -> "Polyhedron":
        lo, hi = vec(lo), vec(hi)
        d = len(lo)
        rows = []
        for i in range(d):
            e = tuple(Fraction(int(i == j)) for j in range(d))
            rows.append((e, lo[i]))
            rows.append((tuple(-x for x in e), -hi[i]))
        return Polyhedron(rows, d)

    @staticmethod
    def interval(a, b) -> "Polyhedron":
        rows = []
        if a is not None:
            rows.append(((1,), a))
        if b is not None:
            rows.append(((-1,), -to_fraction(b)))
        return Polyhedron(rows, 1)

    @staticmethod
    def from_generators(points: Sequence[Sequence], rays: Sequence[Sequence] = (), lines: Sequence[Sequence] = (),
                        dim: int | None = None) -> "Polyhedron":
        """conv(points) + cone(rays) + span(lines)."""
        points = [vec(p) for p in points]
        if dim is None:
            dim = len(points[0]) if points else len(rays[0])
        if not points:
            return Polyhedron.empty(dim)
        gens = [(Fraction(1),) + p for p in points]
        gens += [(Fraction(0),) + vec(r) for r in rays if any(r)]
        for l in lines:
            if any(l):
                gens.append((Fraction(0),) + vec(l))
                gens.append((Fraction(0),) + tuple(-x for x in vec(l)))
        rows = _cone_facets(gens, dim + 1)
        out = []
        for a in rows:
            if any(a[1:]):
                out.append((a[1:], -a[0]))
        poly = Polyhedron(out, dim)
        return poly

    @staticmethod
    def simplex(vertices: Sequence[Sequence]) -> "Polyhedron":
        return Polyhedron.from_generators(vertices)

    # ------------------------------------------------------------------ basics
    def contains(self, x: Sequence) -> bool:
        if self._forced_empty:
            return False
        x = vec(x)
        return all(dot(a, x) >= c for a, c in self.rows)

    def translate(self, t: Sequence) -> "Polyhedron":
        t = vec(t)
        return Polyhedron([(a, c + dot(a, t)) for a, c in self.rows] if not self._forced_empty else [((0,) * self.d, 1)],
                          self.d)

    def scale(self, k) -> "Polyhedron":
        k = to_fraction(k)
        if k <= 0:
            raise PolyhedronError("scale factor must be positive")
        return Polyhedron([(a, c * k) for a, c in self.rows] if not self._forced_empty else [((0,) * self.d, 1)],
                          self.d)

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if self.d != other.d:
            raise PolyhedronError("dimension mismatch")
        rows = list(self.rows) + list(other.rows)
        if self._forced_empty or other._forced_empty:
            return Polyhedron.empty(self.d)
        return Polyhedron(rows, self.d)

    def linear_image_rows(self) -> list[tuple[Vector, Fraction]]:
        return list(self.rows)

    # ------------------------------------------------------------------ generators
    def _compute_generators(self):
        d = self.d
        if self._forced_empty:
            return [], [], []
        a = [r[0] for r in self.rows]
        c = [r[1] for r in self.rows]
        if not a:
            lin = [tuple(Fraction(int(i == j)) for i in range(d)) for j in range(d)]
            return [tuple(Fraction(0) for _ in range(d))], [], lin
        rowspace, _ = rref(a)
        r = len(rowspace)
        lineality = [tuple(v) for v in nullspace(a, d)]
        rs_t = transpose(rowspace)  # d x r
        vertices: list[Vector] = []
        seen = set()
        for subset in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in subset]
            m = [[dot(row, col) for col in rowspace] for row in sub]
            y = solve(m, [c[i] for i in subset])
            if y is None or rank(m) < r:
                continue
            x = tuple(sum((rs_t[i][j] * y[j] for j in range(r)), Fraction(0)) for i in range(d))
            if x in seen:
                continue
            if all(dot(ai, x) >= ci for ai, ci in zip(a, c)):
                seen.add(x)
                vertices.append(x)
        rays: list[Vector] = []
        seen_r = set()
        if vertices and r >= 1:
            for subset in itertools.combinations(range(len(a)), r - 1):
                sub = [a[i] for i in subset]
                m = [[dot(row, col) for col in rowspace] for row in sub] if sub else []
                if sub and rank(m) < r - 1:
                    continue
                ker = nullspace(m, r) if sub else [[Fraction(int(i == j)) for i in range(r)] for j in range(r)]
                if len(ker) != 1:
                    continue
                z = ker[0]
                y = tuple(sum((rs_t[i][j] * z[j] for j in range(r)), Fraction(0)) for i in range(d))
                vals = [dot(ai, y) for ai in a]
                if all(v >= 0 for v in vals):
                    pass
                elif all(v <= 0 for v in vals):
                    y = tuple(-v for v in y)
                else:
                    continue
                py = tuple(Fraction(v) for v in primitive(y))
                if py not in seen_r:
                    seen_r.add(py)
                    rays.append(py)
        return sorted(vertices), sorted(rays), lineality

    @property
    def generators(self) -> tuple[list[Vector], list[Vector], list[Vector]]:
        if self._gens is None:
            self._gens = self._compute_generators()
        return self._gens

    @property
    def vertices(self) -> list[Vector]:
        return self.generators[0]

    @property
    def rays(self) -> list[Vector]:
        return self.generators[1]

    @property
    def lineality(self) -> list[Vector]:
        return self.generators[2]

    def is_empty(self) -> bool:
        return not self.vertices

    def is_bounded(self) -> bool:
        return not self.is_empty() and not self.rays and not self.lineality

    def is_pointed(self) -> bool:
        return not self.lineality

    @cached_property
    def lin_basis(self) -> list[Vector]:
        """RREF basis of the linear space parallel to the affine hull."""
        verts, rays, lines = self.generators
        if not verts:
            return []
        vecs = [tuple(x - y for x, y in zip(v, verts[0])) for v in verts[1:]] + list(rays) + list(lines)
        vecs = [v for v in vecs if any(v)]
        return [tuple(r) for r in rref(vecs)[0]] if vecs else []

    @property
    def dim(self) -> int:
        if self.is_empty():
            return -1
        return len(self.lin_basis)

    @cached_property
    def affine_point(self) -> Vector:
        """Canonical point of the affine hull: a vertex with pivot coordinates zeroed."""
        verts = self.vertices
        if not verts:
            raise PolyhedronError("empty polyhedron")
        x = list(verts[0])
        for row in self.lin_basis:
            p = next(i for i, v in enumerate(row) if v)
            f = x[p]
            if f:
                x = [a - f * b for a, b in zip(x, row)]
        return tuple(x)

    @property
    def affine_key(self) -> tuple:
        return (self.d, self.affine_point, tuple(self.lin_basis))

    @cached_property
    def lattice_basis(self) -> list[tuple[int, ...]]:
        """Basis of the lattice Z^d intersected with the linear hull."""
        return [tuple(v) for v in saturate(self.lin_basis, self.d)] if self.lin_basis else []

    def is_affine_subspace(self) -> bool:
        return not self.is_empty() and len(self.vertices) == 1 and not self.rays

    @cached_property
    def key(self) -> tuple:
        """Canonical description independent of the inequality presentation."""
        if self.is_empty():
            return ("empty", self.d)
        lines = [tuple(r) for r in rref(self.lineality)[0]] if self.lineality else []

        def reduce(x, ray=False):
            x = list(x)
            for row in lines:
                p = next(i for i, v in enumerate(row) if v)
                f = x[p]
                if f:
                    x = [a - f * b for a, b in zip(x, row)]
            if ray:
                return tuple(Fraction(v) for v in primitive(x))
            return tuple(x)

        verts = sorted({reduce(v) for v in self.vertices})
        rays = sorted({reduce(r, True) for r in self.rays if any(reduce(r))})
        return (self.d, tuple(verts), tuple(rays), tuple(lines))

    def __eq__(self, other):
        return isinstance(other, Polyhedron) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        if self.is_empty():
            return f"Polyhedron(empty, d={self.d})"
        return f"Polyhedron({describe(self)})"

    # ------------------------------------------------------------------ faces
    def _tight(self, verts, rays) -> frozenset:
        out = set()
        for i, (a, c) in enumerate(self.rows):
            if all(dot(a, v) == c for v in verts) and all(dot(a, r) == 0 for r in rays):
                out.add(i)
        return frozenset(out)

    def _face_gens(self, tight: frozenset):
        verts = [v for v in self.vertices if all(dot(self.rows[i][0], v) == self.rows[i][1] for i in tight)]
        rays = [r for r in self.rays if all(dot(self.rows[i][0], r) == 0 for i in tight)]
        return verts, rays

    def _face_polyhedron(self, tight: frozenset) -> "Polyhedron":
        rows = list(self.rows) + [(tuple(-x for x in self.rows[i][0]), -self.rows[i][1]) for i in tight]
        face = Polyhedron(rows, self.d)
        verts, rays = self._face_gens(tight)
        face._gens = (verts, rays, list(self.lineality))
        return face

    @cached_property
    def faces(self) -> list[Face]:
        """All nonempty faces, sorted by decreasing dimension."""
        if self.is_empty():
            return []
        top = self._tight(self.vertices, self.rays)
        seen = {top}
        order = [top]
        frontier = [top]
        while frontier:
            nxt = []
            for t in frontier:
                for j in range(len(self.rows)):
                    if j in t:
                        continue
                    verts, rays = self._face_gens(t | {j})
                    if not verts:
                        continue
                    closure = self._tight(verts, rays)
                    if closure not in seen:
                        seen.add(closure)
                        order.append(closure)
                        nxt.append(closure)
            frontier = nxt
        faces = [Face(t, self._face_polyhedron(t)) for t in order]
        faces.sort(key=lambda f: (-f.dim, f.polyhedron.key))
        return faces

    def facets(self) -> list[tuple["Polyhedron", Vector, Fraction]]:
        """Facets with an inward defining inequality <a, x> >= c (a restricted to the hull)."""
        out = []
        top = self._tight(self.vertices, self.rays)
        for f in self.faces:
            if f.dim == self.dim - 1:
                i = min(f.tight - top)
                out.append((f.polyhedron, self.rows[i][0], self.rows[i][1]))
        return out

    def implicit_equalities(self) -> frozenset:
        return self._tight(self.vertices, self.rays)

    def tangent_cone(self, v: Sequence) -> "Polyhedron":
        v = vec(v)
        if not self.contains(v):
            return Polyhedron.empty(self.d)
        rows = [(a, c) for a, c in self.rows if dot(a, v) == c]
        return Polyhedron(rows, self.d)

    def face_tangent_cone(self, face: Face) -> "Polyhedron":
        return Polyhedron([self.rows[i] for i in face.tight], self.d)

    def recession_cone(self) -> "Polyhedron":
        return Polyhedron([(a, 0) for a, _ in self.rows], self.d)

    def bounding_box(self) -> tuple[Vector, Vector]:
        if not self.is_bounded():
            raise PolyhedronError("unbounded polyhedron has no bounding box")
        verts = self.vertices
        lo = tuple(min(v[i] for v in verts) for i in range(self.d))
        hi = tuple(max(v[i] for v in verts) for i in range(self.d))
        return lo, hi


def _cone_facets(gens: list[Vector], n: int) -> list[Vector]:
    """Facet normals a (with <a, g> >= 0 on all generators) plus equations of the span."""
    m = rank(gens)
    rows: list[Vector] = []
    for eq in nullspace(gens, n):
        e = tuple(Fraction(x) for x in primitive(eq))
        rows.append(e)
        rows.append(tuple(-x for x in e))
    if m == 0:
        return rows
    span = rref(gens)[0]
    seen = set()
    idx = range(len(gens))
    for subset in itertools.combinations(idx, m - 1):
        sub = [gens[i] for i in subset]
        if m > 1 and rank(sub) < m - 1:
            continue
        mat = [[dot(g, b) for b in span] for g in sub] if sub else []
        ker = nullspace(mat, m) if sub else [[Fraction(int(i == j)) for i in range(m)] for j in range(m)]
        if len(ker) != 1:
            continue
        y = ker[0]
        a = tuple(sum((span[j][i] * y[j] for j in range(m)), Fraction(0)) for i in range(n))
        vals = [dot(a, g) for g in gens]
        if all(v >= 0 for v in vals):
            pass
        elif all(v <= 0 for v in vals):
            a = tuple(-x for x in a)
        else:
            continue
        pa = tuple(Fraction(x) for x in primitive(a))
        if pa not in seen:
            seen.add(pa)
            rows.append(pa)
    return rows


def describe(p: Polyhedron) -> str:
    """Short human-readable description used in pretty printing."""
    if p.is_empty():
        return "empty"
    from .scalars import format_fraction as ff

    def pt(x):
        return ff(x[0]) if len(x) == 1 else "(" + ",".join(ff(v) for v in x) + ")"

    verts, rays, lines = p.generators
    if p.d == 1:
        if lines:
            return "R"
        lo = min(v[0] for v in verts)
        hi = max(v[0] for v in verts)
        if rays:
            return f"[{ff(lo)},inf)" if rays[0][0] > 0 else f"(-inf,{ff(hi)}]"
        return ff(lo) if lo == hi else f"[{ff(lo)},{ff(hi)}]"
    if not rays and not lines:
        if len(verts) == 1:
            return pt(verts[0])
        if len(verts) == 2:
            return f"[{pt(verts[0])},{pt(verts[1])}]"
        return "conv{" + ",".join(pt(v) for v in verts) + "}"
    parts = ["conv{" + ",".join(pt(v) for v in verts) + "}"]
    if rays:
        parts.append("cone{" + ",".join(pt(r) for r in rays) + "}")
    if lines:
        parts.append("span{" + ",".join(pt(l) for l in lines) + "}")
    return "+".join(parts)


# ---------------------------------------------------------------------- affine subspaces


@dataclass(frozen=True)
class AffineSubspace:
    point: Vector
    lin_basis: tuple[Vector, ...]

    @staticmethod
    def of(point: Sequence, basis: Sequence[Sequence] = ()) -> "AffineSubspace":
        point = vec(point)
        basis = [vec(b) for b in basis if any(b)]
        basis = [tuple(r) for r in rref(basis)[0]] if basis else []
        x = list(point)
        for row in basis:
            p = next(i for i, v in enumerate(row) if v)
            f = x[p]
            if f:
                x = [a - f * b for a, b in zip(x, row)]
        return AffineSubspace(tuple(x), tuple(basis))

    @property
    def dim(self) -> int:
        return len(self.lin_basis)

    @property
    def ambient(self) -> int:
        return len(self.point)

    def is_rational(self) -> bool:
        return True  # all data is rational by construction

    def contains(self, x: Sequence) -> bool:
        diff = [a - b for a, b in zip(vec(x), self.point)]
        return coords_in_basis(list(self.lin_basis), diff) is not None

    def as_polyhedron(self) -> Polyhedron:
        d = self.ambient
        eqs = nullspace(list(self.lin_basis), d) if self.lin_basis else [
            [Fraction(int(i == j)) for i in range(d)] for j in range(d)]
        rows = []
        for e in eqs:
            c = dot(e, self.point)
            rows.append((tuple(e), c))
            rows.append((tuple(-x for x in e), -c))
        return Polyhedron(rows, d)


def affine_hull_and_apex(p: Polyhedron) -> tuple[AffineSubspace, AffineSubspace, list[Vector]]:
    """Affine hull, apex set (the minimal face of a cone) and lineality basis."""
    if p.is_empty():
        raise PolyhedronError("empty polyhedron")
    hull = AffineSubspace.of(p.affine_point, p.lin_basis)
    lines = list(p.lineality)
    apex = AffineSubspace.of(p.vertices[0], lines)
    return hull, apex, [tuple(r) for r in rref(lines)[0]] if lines else []


def tangent_cone(p: Polyhedron, v: Sequence) -> Polyhedron:
    return p.tangent_cone(v)


def brianchon_gram(p: Polyhedron) -> list[tuple[int, Polyhedron, Face]]:
    """[P] = sum over faces F of (-1)^dim F [T_F P] for bounded P."""
    if p.is_empty():
        raise PolyhedronError("empty polyhedron")
    if not p.is_bounded():
        raise PolyhedronError("Brianchon-Gram decomposition needs a bounded polyhedron; split it first")
    return [((-1) ** f.dim, p.face_tangent_cone(f), f) for f in p.faces]


def tangent_cone_decomposition(p: Polyhedron) -> list[tuple[int, Polyhedron]]:
    """[P] as a signed sum of tangent cones at the faces of P that are bounded modulo lineality.

    For bounded P this is the Brianchon-Gram identity; for unbounded P only faces
    without rays contribute, with sign (-1)^(dim F - dim lineality).
    """
    if p.is_empty():
        raise PolyhedronError("empty polyhedron")
    base = len(p.lineality)
    out = []
    for f in p.faces:
        if f.polyhedron.rays:
            continue
        out.append(((-1) ** (f.dim - base), p.face_tangent_cone(f)))
    return out


# ---------------------------------------------------------------------- cones and triangulations


def cone_from_rays(rays: Sequence[Sequence], d: int | None = None, lines: Sequence[Sequence] = ()) -> Polyhedron:
    d = d if d is not None else len(rays[0])
    return Polyhedron.from_generators([(0,) * d], rays, lines, d)


def triangulate_cone(generators: Sequence[Sequence]) -> list[tuple[int, tuple[int, ...]]]:
    """Signed simplicial decomposition of a pointed cone.

    A pulling triangulation over the given generators (the last generator of each
    face is pulled first) followed by inclusion-exclusion over interior cells, so
    that [cone] = sum sign * [cone(generators[i] for i in cell)] holds pointwise.
    """
    gens = [vec(g) for g in generators]
    if not gens:
        return [(1, ())]
    d = len(gens[0])
    cone = cone_from_rays(gens, d)
    if cone.lineality:
        raise PolyhedronError("cone is not pointed")
    k = cone.dim
    face_sets = []
    for f in cone.faces:
        members = frozenset(i for i, g in enumerate(gens) if f.polyhedron.contains(g) and any(g))
        face_sets.append((f.dim, members))
    facets = [m for dim, m in face_sets if dim == k - 1]

    def pull(members: frozenset, dim: int) -> list[frozenset]:
        if dim == 0:
            return [frozenset()]
        if len(members) == dim and rank([gens[i] for i in members]) == dim:
            return [members]
        apex = max(members)
        sub_facets = [m for fd, m in face_sets if fd == dim - 1 and m <= members and apex not in m]
        cells = []
        for sub in sub_facets:
            for cell in pull(sub, dim - 1):
                cells.append(cell | {apex})
        return cells

    top = frozenset(i for i, g in enumerate(gens) if any(g))
    # keep only generators that are used by the top face (all of them lie in the cone)
    maximal = pull(top, k)
    faces = set()
    for cell in maximal:
        for r in range(len(cell) + 1):
            for sub in itertools.combinations(sorted(cell), r):
                faces.add(frozenset(sub))
    out = []
    for tau in sorted(faces, key=lambda s: (len(s), sorted(s))):
        if k > 0 and any(tau <= fm for fm in facets):
            continue
        out.append(((-1) ** (k - len(tau)), tuple(sorted(tau))))
    return out


@dataclass(frozen=True)
class SimplicialPiece:
    sign: int
    generators: tuple[tuple[int, ...], ...]
    shifts: tuple[tuple[int, ...], ...]

    @property
    def index(self) -> int:
        return len(self.shifts)


def triangulate_and_unimodularize(generators: Sequence[Sequence]) -> list[SimplicialPiece]:
    """Split a pointed cone into signed simplicial cones and their lattice cosets.

    For each simplicial cone with primitive generators a_i the lattice points are
    the disjoint union of delta + sum Z_{>=0} a_i over the lattice points delta of
    the half-open parallelepiped.
    """
    gens = [vec(g) for g in generators]
    if not gens:
        return [SimplicialPiece(1, (), ((),))]
    d = len(gens[0])
    out = []
    for sign, cell in triangulate_cone(gens):
        prim = [primitive(gens[i]) for i in cell]
        if not prim:
            out.append(SimplicialPiece(sign, (), (tuple(0 for _ in range(d)),)))
            continue
        basis = saturate(prim, d)
        coords = [[int(x) for x in coords_in_basis(basis, g)] for g in prim]
        reps = coset_representatives(coords)
        shifts = []
        for frac in reps:
            delta = tuple(int(sum((f * g[i] for f, g in zip(frac, prim)), Fraction(0))) for i in range(d))
            shifts.append(delta)
        out.append(SimplicialPiece(sign, tuple(prim), tuple(sorted(shifts))))
    return out


# ---------------------------------------------------------------------- polarization


@dataclass(frozen=True)
class SignedCone:
    sign: int
    cone: "Polyhedron"
    shift: Vector
    tag: int = 0

    @property
    def apex_key(self) -> tuple:
        key = self.cone.key
        return (key[0], key[1], key[3])


@dataclass
class PolarizedDecomposition:
    """Signed cones with, per proper apex set, a certificate (xi, c): cone in {<xi, x> >= c}, meeting the boundary in the apex."""

    cones: list[SignedCone]
    half_spaces: dict

    def groups(self) -> dict:
        out: dict = {}
        for c in self.cones:
            out.setdefault(c.apex_key, []).append(c)
        return out

    def is_polarized(self) -> bool:
        for key, members in self.groups().items():
            if len(key[2]) == key[0]:
                continue
            if key not in self.half_spaces:
                return False
            xi, c = self.half_spaces[key]
            for m in members:
                apex = m.cone.vertices[0]
                if dot(xi, apex) != c or any(dot(xi, l) for l in m.cone.lineality):
                    return False
                if any(dot(xi, r) <= 0 for r in _rays_mod_lines(m.cone)):
                    return False
        return True


def _orth_complement_projector(lines: list[Vector], d: int):
    """Orthogonal projection onto the complement of span(lines)."""
    if not lines:
        return lambda v: tuple(v)
    basis = [tuple(r) for r in rref(lines)[0]]
    gram = [[dot(a, b) for b in basis] for a in basis]
    from .linalg import inverse as _inv

    ginv = _inv(gram)

    def proj(v):
        coeffs = [dot(b, v) for b in basis]
        y = [sum((ginv[i][j] * coeffs[j] for j in range(len(basis))), Fraction(0)) for i in range(len(basis))]
        return tuple(v[i] - sum((y[j] * basis[j][i] for j in range(len(basis))), Fraction(0)) for i in range(d))

    return proj


def _rays_mod_lines(cone: "Polyhedron") -> list[Vector]:
    proj = _orth_complement_projector(list(cone.lineality), cone.d)
    out = []
    for r in cone.rays:
        v = proj(r)
        if any(v):
            out.append(tuple(Fraction(x) for x in primitive(v)))
    return sorted(set(out))


def _pointed_certificate(rays: list[Vector], lines: list[Vector], d: int) -> Vector | None:
    """xi orthogonal to lines with <xi, r> > 0 for all rays, or None if cone(rays) is not pointed."""
    if not rays:
        return tuple(Fraction(0) for _ in range(d))
    hull = cone_from_rays(rays, d)
    if hull.lineality:
        return None
    eqs = hull.implicit_equalities()
    xi = [Fraction(0)] * d
    for i, (a, _) in enumerate(hull.rows):
        if i not in eqs:
            xi = [x + y for x, y in zip(xi, a)]
    xi = _orth_complement_projector(lines, d)(xi)
    if all(dot(xi, r) > 0 for r in rays):
        return tuple(xi)
    return None


def _generic_direction(d: int, attempt: int, lines: list[Vector]) -> Vector:
    # deterministic, with distinct prime denominators to avoid accidental orthogonality
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    v = tuple(Fraction((attempt + 1) * (i + 1) ** 2 + 1, primes[(i + attempt) % len(primes)]) * (-1) ** (i * attempt)
              for i in range(d))
    return _orth_complement_projector(lines, d)(v)


def _flip_terms(sign: int, apex: Vector, lines: list, rays: list, xi: Vector, keep_lines: bool):
    """Signed closed cones with all rays xi-positive; flips use 1_{z>=0} = 1 - 1_{-z>=0} + 1_{z=0}.

    With keep_lines False the line terms are omitted (valid when they cancel
    globally, as in the Lawrence-Varchenko identity for polytopes).
    """
    pos = [r for r in rays if dot(xi, r) > 0]
    neg = [r for r in rays if dot(xi, r) < 0]
    out = []
    options = (("line", 1), ("flip", -1), ("drop", 1)) if keep_lines else (("flip", -1), ("drop", 1))
    for choice in itertools.product(options, repeat=len(neg)):
        s = sign
        new_rays = list(pos)
        new_lines = list(lines)
        for (kind, sg), r in zip(choice, neg):
            s *= sg
            if kind == "line":
                new_lines.append(r)
            elif kind == "flip":
                new_rays.append(tuple(-x for x in r))
        out.append((s, Polyhedron.from_generators([apex], new_rays, new_lines, len(apex))))
    return out


def lawrence_varchenko(p: "Polyhedron", xi: Sequence) -> list[tuple[int, "Polyhedron"]]:
    """[P] as signed closed cones at the vertices of a bounded P, all pointing along xi."""
    xi = vec(xi)
    out = []
    for v in p.vertices:
        cone = p.tangent_cone(v)
        rays = [tuple(Fraction(x) for x in primitive(r)) for r in cone.rays]
        for sign, cell in triangulate_cone(rays) if rays else [(1, ())]:
            out.extend(_flip_terms(sign, v, [], [rays[i] for i in cell], xi, keep_lines=False))
    return out


def probe_points(polys: Sequence["Polyhedron"], d: int, n_random: int = 100, seed: int = 0) -> list[Vector]:
    """Vertices, pairwise midpoints, small perturbations and random rational points."""
    import random

    rng = random.Random(seed)
    base = set()
    for p in polys:
        if not p.is_empty():
            base.update(p.vertices)
    base = sorted(base) or [tuple(Fraction(0) for _ in range(d))]
    pts = set(base)
    for a, b in itertools.combinations(base, 2):
        pts.add(tuple((x + y) / 2 for x, y in zip(a, b)))
    eps = Fraction(1, 7)
    for a in list(base):
        for i in range(d):
            for sgn in (1, -1):
                pts.add(tuple(x + (sgn * eps if j == i else 0) for j, x in enumerate(a)))
    lo = min(min(v) for v in base) - 3
    hi = max(max(v) for v in base) + 3
    for _ in range(n_random):
        pts.add(tuple(lo + Fraction(rng.randint(0, 997), 997) * (hi - lo) for _ in range(d)))
    return sorted(pts)


def check_signed_identity(lhs: Sequence[tuple[int, "Polyhedron"]], rhs: Sequence[tuple[int, "Polyhedron"]],
                          points: Sequence[Vector]) -> Vector | None:
    """First point where the two signed indicator sums differ, or None."""
    for x in points:
        a = sum(s for s, p in lhs if p.contains(x))
        b = sum(s for s, p in rhs if p.contains(x))
        if a != b:
            return x
    return None


def polarized_cone_decomposition(pieces: Sequence[tuple["Polyhedron", Sequence]],
                                 betas: Sequence | None = None) -> PolarizedDecomposition:
    """Signed cones with a common polarizing half-space per apex set.

    Each piece is first split into cones: a bounded piece whose nearest point
    beta to the origin (or the given beta) is nonzero uses vertex cones pointing
    along beta, so all of them lie in {<beta, x> >= |beta|^2}; other pieces use
    tangent cones at faces.  Apex groups that are not jointly pointed are then
    flipped along a generic direction, moving line terms to larger apex sets.
    """
    cones: list[SignedCone] = []
    for idx, (p, sigma) in enumerate(pieces):
        sigma = vec(sigma) if sigma is not None else tuple(Fraction(0) for _ in range(p.d))
        beta = None
        if betas is not None and betas[idx] is not None:
            beta = vec(betas[idx])
        elif p.is_bounded():
            beta = nearest_point(p)
        split = None
        if beta is not None and any(beta) and p.is_bounded():
            xi = _perturb_along(beta, p)
            split = lawrence_varchenko(p, xi)
            if check_signed_identity([(1, p)], split, probe_points([p], p.d)) is not None:
                split = None
        if split is None:
            split = tangent_cone_decomposition(p)
        cones.extend(SignedCone(s, c, sigma, idx) for s, c in split)
    # group and flip by increasing apex dimension
    pending: dict = {}
    for c in cones:
        pending.setdefault(c.apex_key, []).append(c)
    done: list[SignedCone] = []
    half_spaces: dict = {}
    while pending:
        key = min(pending, key=lambda k: (len(k[2]), k))
        members = _merge(pending.pop(key))
        if not members:
            continue
        d = key[0]
        lines = [tuple(Fraction(x) for x in l) for l in key[2]]
        if len(lines) == d:
            done.extend(members)
            continue
        apex = members[0].cone.vertices[0]
        all_rays = sorted({r for m in members for r in _rays_mod_lines(m.cone)})
        xi = _pointed_certificate(all_rays, lines, d)
        if xi is not None:
            done.extend(members)
            half_spaces[key] = (xi, dot(xi, apex))
            continue
        cell_data = []
        for m in members:
            rays = _rays_mod_lines(m.cone)
            for sign, cell in triangulate_cone(rays) if rays else [(1, ())]:
                cell_data.append((m.sign * sign, m.shift, m.tag, [rays[i] for i in cell]))
        attempt = 0
        while True:
            xi = _generic_direction(d, attempt, lines)
            if all(dot(xi, r) for _, _, _, rs in cell_data for r in rs):
                break
            attempt += 1
        half_spaces[key] = (xi, dot(xi, apex))
        for sign, shift, tag, rays in cell_data:
            for s, cone in _flip_terms(sign, apex, lines, rays, xi, keep_lines=True):
                sc = SignedCone(s, cone, shift, tag)
                if sc.apex_key == key:
                    done.append(sc)
                else:
                    pending.setdefault(sc.apex_key, []).append(sc)
    return PolarizedDecomposition(_merge(done), half_spaces)


def _perturb_along(beta: Vector, p: "Polyhedron") -> Vector:
    """A direction close to beta that is nonzero on every edge direction of P, keeping the sign of <beta, r> where nonzero."""
    edges = []
    for v in p.vertices:
        edges.extend(p.tangent_cone(v).rays)
    d = len(beta)
    for attempt in range(50):
        g = _generic_direction(d, attempt, [])
        scale = Fraction(1)
        for r in edges:
            br, gr = dot(beta, r), dot(g, r)
            if br and gr:
                scale = min(scale, abs(br) / (2 * abs(gr)))
        xi = tuple(b + scale * x for b, x in zip(beta, g))
        if all(dot(xi, r) for r in edges):
            return xi
    raise PolyhedronError("could not find a generic polarizing direction")


def _merge(cones: Sequence[SignedCone]) -> list[SignedCone]:
    acc: dict = {}
    order = []
    for c in cones:
        key = (c.cone, c.shift, c.tag)
        if key not in acc:
            acc[key] = 0
            order.append(key)
        acc[key] += c.sign
    return [SignedCone(acc[k], k[0], k[1], k[2]) for k in order if acc[k]]


# ---------------------------------------------------------------------- nearest point


def nearest_point(p: Polyhedron) -> Vector:
    """The point of P of minimal Euclidean norm, found by projecting onto face hulls."""
    if p.is_empty():
        raise PolyhedronError("empty polyhedron")
    best = None
    best_norm = None
    for f in p.faces:
        face = f.polyhedron
        x0 = face.vertices[0]
        basis = list(face.lin_basis)
        if basis:
            gram = [[dot(u, v) for v in basis] for u in basis]
            rhs = [-dot(u, x0) for u in basis]
            y = solve(gram, rhs)
            x = tuple(x0[i] + sum((y[j] * basis[j][i] for j in range(len(basis))), Fraction(0)) for i in range(p.d))
        else:
            x = x0
        if p.contains(x):
            n = dot(x, x)
            if best_norm is None or n < best_norm:
                best, best_norm = x, n
    return best


# ---------------------------------------------------------------------- integration and lattice points


def _simplex_integral_monomials(vertices: list[Vector], p: Poly, lattice_basis: list[tuple[int, ...]]):
    m = len(vertices) - 1
    if m == 0:
        return p.evaluate(vertices[0])
    diffs = [tuple(a - b for a, b in zip(v, vertices[0])) for v in vertices[1:]]
    coords = [coords_in_basis(lattice_basis, dv) for dv in diffs]
    vol = abs(det(coords)) / math.factorial(m)
    # substitute x = sum lambda_i v_i, lambda in m+1 variables
    images = [Poly.linear([v[i] for v in vertices]) for i in range(len(vertices[0]))]
    q = p.compose(images)
    total = Fraction(0)
    for e, c in q.terms.items():
        num = Fraction(1)
        for a in e:
            num *= math.factorial(a)
        total = total + c * (num * math.factorial(m) * vol / math.factorial(sum(e) + m))
    return total


def integrate_poly_over_polytope(p: Poly, f: Polyhedron):
    """Integral of p over the bounded polyhedron f with the lattice-normalized measure."""
    if f.is_empty():
        return Fraction(0)
    if not f.is_bounded():
        raise PolyhedronError("cannot integrate over an unbounded polyhedron")
    if f.dim == 0:
        return p.evaluate(f.vertices[0])
    basis = f.lattice_basis
    total = Fraction(0)
    for sign, simplex in _polytope_simplices(f):
        total = total + sign * _simplex_integral_monomials(simplex, p, basis)
    return total


@lru_cache(maxsize=4096)
def _polytope_simplices(f: Polyhedron) -> tuple:
    verts = f.vertices
    lifted = [(Fraction(1),) + v for v in verts]
    return tuple((sign, [verts[i] for i in cell]) for sign, cell in triangulate_cone(lifted)
                 if len(cell) == f.dim + 1)


def enumerate_lattice_points(f: Polyhedron) -> list[tuple[int, ...]]:
    """All integer points of a bounded polyhedron, in lexicographic order."""
    if f.is_empty():
        return []
    if not f.is_bounded():
        raise PolyhedronError("cannot enumerate lattice points of an unbounded polyhedron")
    lo, hi = f.bounding_box()
    lo_i = [ceil_fraction(x) for x in lo]
    hi_i = [math.floor(x) for x in hi]
    a_rows, b_rows = integer_constraints(f.rows)
    return _kernels.filter_box(a_rows, b_rows, lo_i, hi_i)


def integer_constraints(rows: Sequence[tuple[Vector, Fraction]]) -> tuple[list[list[int]], list[int]]:
    """Integer rows A, b with {x in Z^d : A x >= b} equal to the lattice points of the rows."""
    a_out, b_out = [], []
    for a, c in rows:
        den = 1
        for x in a:
            den = den * x.denominator // math.gcd(den, x.denominator)
        ints = [int(x * den) for x in a]
        a_out.append(ints)
        b_out.append(ceil_fraction(c * den))
    return a_out, b_out


def lattice_normalized_volume(f: Polyhedron):
    return integrate_poly_over_polytope(Poly.const(f.d, Fraction(1)), f)


__all__ = [
    "AffineSubspace",
    "Face",
    "LatticeError",
    "Polyhedron",
    "PolyhedronError",
    "SimplicialPiece",
    "affine_hull_and_apex",
    "brianchon_gram",
    "cone_from_rays",
    "describe",
    "enumerate_lattice_points",
    "hermite_complement",
    "integer_constraints",
    "integrate_poly_over_polytope",
    "lattice_index",
    "lattice_normalized_volume",
    "nearest_point",
    "tangent_cone",
    "polarized_cone_decomposition",
    "check_signed_identity",
    "probe_points",
    "SignedCone",
    "PolarizedDecomposition",
    "lawrence_varchenko",
    "tangent_cone_decomposition",
    "triangulate_and_unimodularize",
    "triangulate_cone",
]
