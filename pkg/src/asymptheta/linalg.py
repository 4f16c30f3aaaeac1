"""Exact rational and integer linear algebra on small dense matrices."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

Matrix = list[list[Fraction]]


class LatticeError(ValueError):
    pass


def fmat(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def transpose(m: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*m)] if m else []


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def matvec(a: Sequence[Sequence], v: Sequence) -> list:
    return [sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a]


def dot(u: Sequence, v: Sequence):
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


def rref(m: Sequence[Sequence]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = [[Fraction(x) for x in row] for row in m]
    if not a:
        return [], []
    rows, cols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if a[i][c]), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a[:r], pivots


def rank(m: Sequence[Sequence]) -> int:
    return len(rref(m)[1]) if m else 0


def nullspace(m: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of {x : m x = 0}."""
    if not m:
        n = ncols or 0
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    n = len(m[0])
    r, piv = rref(m)
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, p in zip(r, piv):
            v[p] = -row[f]
        basis.append(v)
    return basis


def solve(m: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """One solution of m x = b, or None when inconsistent."""
    if not m:
        return []
    n = len(m[0])
    aug = [list(row) + [Fraction(bi)] for row, bi in zip(m, b)]
    r, piv = rref(aug)
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for row, p in zip(r, piv):
        x[p] = row[n]
    return x


def inverse(m: Sequence[Sequence]) -> Matrix:
    n = len(m)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    r, piv = rref(aug)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise LatticeError("singular matrix")
    return [row[n:] for row in r]


def det(m: Sequence[Sequence]) -> Fraction:
    a = [[Fraction(x) for x in row] for row in m]
    n = len(a)
    out = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c]), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            out = -out
        out *= a[c][c]
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] / a[c][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return out


def row_space_basis(vectors: Sequence[Sequence]) -> Matrix:
    return rref(vectors)[0] if vectors else []


def primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a nonzero rational vector to the primitive integer vector on its ray."""
    v = [Fraction(x) for x in v]
    den = 1
    for x in v:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g == 0:
        raise LatticeError("zero vector has no primitive multiple")
    return tuple(x // g for x in ints)


def content(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = math.gcd(g, int(x))
    return g


def integer_row_scale(v: Sequence) -> list[int]:
    """Smallest positive multiple of a rational vector that is integral."""
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // math.gcd(den, Fraction(x).denominator)
    return [int(Fraction(x) * den) for x in v]


# --------------------------------------------------------------------------
# integer lattices


def column_hermite(m: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Column-style echelon form H = M U with U unimodular.

    Returns (H, U).  Zero columns of H are at the right; the matching columns of
    U form a basis of the integer kernel of M.
    """
    rows = len(m)
    cols = len(m[0]) if rows else 0
    h = [[int(x) for x in row] for row in m]
    u = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for mat in (h, u):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    pc = 0
    for r in range(rows):
        if pc >= cols:
            break
        for j in range(pc + 1, cols):
            if h[r][j] == 0:
                continue
            x, y = h[r][pc], h[r][j]
            g, s, t = _xgcd(x, y)
            colop(pc, j, s, t, -y // g, x // g)
        if h[r][pc] == 0:
            continue
        if h[r][pc] < 0:
            _negate_col(h, u, pc)
        for j in range(pc):
            q = h[r][j] // h[r][pc]
            if q:
                for mat in (h, u):
                    for row in mat:
                        row[j] -= q * row[pc]
        pc += 1
    return h, u


def _negate_col(h, u, c):
    for mat in (h, u):
        for row in mat:
            row[c] = -row[c]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, s, t with s a + t b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def integer_kernel(m: Sequence[Sequence], ncols: int) -> list[list[int]]:
    """Lattice basis of {x in Z^n : m x = 0} (m rational)."""
    if not m:
        return [[int(i == j) for i in range(ncols)] for j in range(ncols)]
    ints = [integer_row_scale(row) for row in m]
    h, u = column_hermite(ints)
    out = []
    for c in range(ncols):
        if all(h[r][c] == 0 for r in range(len(h))):
            out.append([u[r][c] for r in range(ncols)])
    return out


def saturate(vectors: Sequence[Sequence], dim: int) -> list[list[int]]:
    """Lattice basis of Z^dim intersected with the span of the given vectors."""
    vecs = [list(map(Fraction, v)) for v in vectors if any(v)]
    if not vecs:
        return []
    eqs = nullspace(vecs, dim)  # functionals vanishing on the span
    if not eqs:
        return [[int(i == j) for i in range(dim)] for j in range(dim)]
    basis = integer_kernel(eqs, dim)
    return _reduce_basis(basis)


def _reduce_basis(basis: list[list[int]]) -> list[list[int]]:
    # canonical-ish: row HNF of the basis rows
    if not basis:
        return basis
    h, _ = column_hermite(transpose(basis))
    cols = [[h[r][c] for r in range(len(h))] for c in range(len(basis))]
    return [c for c in cols if any(c)]


def is_saturated(vectors: Sequence[Sequence[int]], dim: int) -> bool:
    if not vectors:
        return True
    sat = saturate(vectors, dim)
    return lattice_index(vectors, sat) == 1


def coords_in_basis(basis: Sequence[Sequence], v: Sequence) -> list[Fraction] | None:
    """Coordinates of v in the (column) basis, None if v is outside its span."""
    if not basis:
        return [] if not any(v) else None
    return solve(transpose(basis), v)


def lattice_index(vectors: Sequence[Sequence], basis: Sequence[Sequence]) -> int:
    """Index of the lattice generated by independent vectors inside the lattice with given basis."""
    if not vectors:
        return 1
    coords = [coords_in_basis(basis, v) for v in vectors]
    if any(c is None for c in coords):
        raise LatticeError("vectors not in span of basis")
    d = abs(det(coords))
    if d == 0:
        raise LatticeError("dependent vectors")
    if d.denominator != 1:
        raise LatticeError("vectors do not lie in the lattice")
    return int(d)


def hermite_complement(basis: Sequence[Sequence[int]], dim: int) -> list[list[int]]:
    """Integer vectors completing a saturated sublattice basis to a basis of Z^dim."""
    basis = [[int(x) for x in b] for b in basis]
    r = len(basis)
    if r == 0:
        return [[int(i == j) for i in range(dim)] for j in range(dim)]
    if r == dim:
        if abs(det(basis)) != 1:
            raise LatticeError("sublattice is not saturated; saturate it first")
        return []
    if not is_saturated(basis, dim):
        raise LatticeError("sublattice is not saturated; saturate it first")
    # prefer standard basis vectors when they complete the basis
    for combo in itertools.combinations(reversed(range(dim)), dim - r):
        comp = [[int(i == j) for i in range(dim)] for j in sorted(combo)]
        if abs(det(basis + comp)) == 1:
            return comp
    # row operations V with V B = [H; 0]; equivalently column ops on B^T
    h, u = column_hermite(basis)  # basis rows are the vectors: B^T U = H
    # B^T U = H with H having r nonzero columns; the last dim-r columns of U span ker B^T.
    # A complement is given by the rows of U^{-1} after the first r ones.
    uinv = inverse([[Fraction(x) for x in row] for row in u])
    comp = [[int(uinv[i][j]) for j in range(dim)] for i in range(r, dim)]
    comp = [c if next(x for x in c if x) > 0 else [-x for x in c] for c in comp]
    full = basis + comp
    if abs(det(full)) != 1:
        raise LatticeError("complement construction failed")
    return comp


def coset_representatives(gens: Sequence[Sequence[int]]) -> list[tuple[Fraction, ...]]:
    """Representatives of (lattice)/(Z gens) as fractional coordinate vectors.

    gens are the coordinates of the generators in a basis of the ambient lattice
    (a square nonsingular integer matrix given by rows).  The returned vectors are
    the coordinates, with respect to the generators, of lattice points in the
    half-open parallelepiped [0,1)^w.
    """
    w = len(gens)
    if w == 0:
        return [()]
    g = transpose([[Fraction(x) for x in row] for row in gens])  # columns = generators
    ginv = inverse(g)
    steps = [tuple(x - math.floor(x) for x in (ginv[i][j] for i in range(w))) for j in range(w)]
    seen = {tuple(Fraction(0) for _ in range(w))}
    frontier = list(seen)
    while frontier:
        nxt = []
        for v in frontier:
            for s in steps:
                u = tuple((a + b) - math.floor(a + b) for a, b in zip(v, s))
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return sorted(seen)
