"""Piecewise quasi-polynomials: finite sums of q * [C_{P, sigma}].

C_{P, sigma} is the set of (k, lambda) with k > 0 and (lambda - sigma) / k in P.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .linalg import dot, rref, solve, nullspace, primitive
from .polyhedra import Polyhedron, PolyhedronError, Vector, enumerate_lattice_points, vec
from .quasipoly import QuasiPolynomial, QuasiPolynomialError
from .scalars import Cyclotomic, Poly, ceil_fraction, frac_part, lcm_all, simplify_scalar, to_fraction


class PiecewiseError(ValueError):
    pass


@dataclass(frozen=True)
class ShiftedCone:
    base: Polyhedron
    shift: Vector

    @staticmethod
    def of(base: Polyhedron, shift: Sequence | None = None) -> "ShiftedCone":
        shift = vec(shift) if shift is not None else tuple(Fraction(0) for _ in range(base.d))
        if len(shift) != base.d:
            raise PiecewiseError("shift dimension mismatch")
        return ShiftedCone(base, shift)

    @property
    def dim(self) -> int:
        return self.base.d

    def contains(self, k: int, lam: Sequence) -> bool:
        if k <= 0:
            return False
        x = tuple((to_fraction(l) - s) / k for l, s in zip(lam, self.shift))
        return self.base.contains(x)

    def slice(self, k: int) -> Polyhedron:
        """k P + sigma."""
        return self.base.scale(k).translate(self.shift)

    def normalized_shift(self) -> Vector:
        """The shift reduced modulo the lineality space of P (which leaves the cone unchanged)."""
        lines = self.base.lineality
        x = list(self.shift)
        if lines:
            for row in rref(lines)[0]:
                p = next(i for i, v in enumerate(row) if v)
                f = x[p]
                if f:
                    x = [a - f * b for a, b in zip(x, row)]
        return tuple(x)

    @property
    def key(self) -> tuple:
        return (self.base.key, self.normalized_shift())

    def denominators(self) -> list[int]:
        return sorted({s.denominator for s in self.shift})


class PiecewiseQP:
    """Finite sum of quasi-polynomials times indicators of shifted cones."""

    def __init__(self, dim: int, pieces: Iterable[tuple[QuasiPolynomial, ShiftedCone]] = ()):
        self.dim = dim
        out = []
        for q, cone in pieces:
            if q.dim != dim or cone.dim != dim:
                raise PiecewiseError("piece dimension mismatch")
            if q.is_zero() or cone.base.is_empty():
                continue
            out.append((q, cone))
        self.pieces: list[tuple[QuasiPolynomial, ShiftedCone]] = out

    # ------------------------------------------------------------------ builders
    @staticmethod
    def indicator(base: Polyhedron, shift: Sequence | None = None, q: QuasiPolynomial | None = None) -> "PiecewiseQP":
        q = q if q is not None else QuasiPolynomial.const(base.d)
        return PiecewiseQP(base.d, [(q, ShiftedCone.of(base, shift))])

    # ------------------------------------------------------------------ arithmetic
    def __add__(self, other: "PiecewiseQP") -> "PiecewiseQP":
        if other.dim != self.dim:
            raise PiecewiseError("dimension mismatch")
        return PiecewiseQP(self.dim, self.pieces + other.pieces)

    def __neg__(self):
        return PiecewiseQP(self.dim, [(-q, c) for q, c in self.pieces])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, QuasiPolynomial):
            return self.scale(c)
        return PiecewiseQP(self.dim, [(q * c, cone) for q, cone in self.pieces])

    __rmul__ = __mul__

    def is_empty(self) -> bool:
        return not self.pieces

    # ------------------------------------------------------------------ evaluation
    def evaluate(self, k: int, lam: Sequence[int]):
        if k <= 0:
            raise PiecewiseError("k must be a positive integer")
        total = Fraction(0)
        for q, cone in self.pieces:
            if cone.contains(k, lam):
                total = total + q.evaluate(k, lam)
        return simplify_scalar(total)

    # ------------------------------------------------------------------ module actions
    def scale(self, h: QuasiPolynomial) -> "PiecewiseQP":
        return PiecewiseQP(self.dim, [(h * q, cone) for q, cone in self.pieces])

    def twist(self, g: Sequence, u=0) -> "PiecewiseQP":
        return PiecewiseQP(self.dim, [(q.twist(g, u), cone) for q, cone in self.pieces])

    def translate(self, sigma: Sequence) -> "PiecewiseQP":
        sigma = vec(sigma)
        if any(s.denominator != 1 for s in sigma):
            raise PiecewiseError("translation vector must be integral")
        return PiecewiseQP(self.dim, [
            (q.translate(sigma), ShiftedCone.of(cone.base, [a + b for a, b in zip(cone.shift, sigma)]))
            for q, cone in self.pieces])

    def shear(self, sigma: Sequence) -> "PiecewiseQP":
        """m'(k, lambda) = m(k, lambda - k sigma), realized by moving P to P + sigma.

        For non-integral sigma the weights must not depend on lambda.
        """
        sigma = vec(sigma)
        integral = all(s.denominator == 1 for s in sigma)
        out = []
        for q, cone in self.pieces:
            if integral:
                n = self.dim + 1
                kv = Poly.var(n, 0)
                images = [kv] + [Poly.var(n, i + 1) - kv * sigma[i] for i in range(self.dim)]
                terms = {}
                for (u, g), p in q.terms.items():
                    # g^(lambda - k sigma) = g^lambda * exp(-2 pi i k <g, sigma>)
                    terms[(u - dot(g, sigma), g)] = p.compose(images)
                q2 = QuasiPolynomial(self.dim, terms)
            else:
                if q.degree > 0 or any(any(g) for _, g in q.terms):
                    raise PiecewiseError("non-integral shear needs weights independent of lambda")
                q2 = q
            out.append((q2, ShiftedCone.of(cone.base.translate(sigma), cone.shift)))
        return PiecewiseQP(self.dim, out)

    def difference(self, eta: Sequence, zeta_u) -> "PiecewiseQP":
        """nabla_eta^zeta m = m - zeta tau_eta m."""
        return self - self.translate(eta) * Cyclotomic.exp2pi(zeta_u)

    # ------------------------------------------------------------------ structure
    def combined(self) -> "PiecewiseQP":
        """Merge pieces on identical shifted cones."""
        groups: dict[tuple, tuple[QuasiPolynomial, ShiftedCone]] = {}
        for q, cone in self.pieces:
            key = cone.key
            if key in groups:
                groups[key] = (groups[key][0] + q, groups[key][1])
            else:
                groups[key] = (q, ShiftedCone.of(cone.base, cone.normalized_shift()))
        return PiecewiseQP(self.dim, [groups[k] for k in sorted(groups, key=repr)])

    def structurally_zero(self) -> bool:
        return self.combined().is_empty()

    def denominators(self) -> list[int]:
        out = {1}
        for q, cone in self.pieces:
            out.update(q.denominators())
            out.update(cone.denominators())
            for v in cone.base.vertices:
                out.update(x.denominator for x in v)
        return sorted(out)

    def period_bound(self) -> int:
        return lcm_all(self.denominators())

    def max_degree(self) -> int:
        return max((q.total_degree for q, _ in self.pieces), default=0)

    def is_bounded(self) -> bool:
        return all(c.base.is_bounded() for _, c in self.pieces)

    def support_radius(self) -> tuple[Fraction, Fraction]:
        """(B, S) with every bounded slice k P + sigma inside the box of radius B k + S."""
        b, s = Fraction(0), Fraction(0)
        for _, cone in self.pieces:
            for v in cone.base.vertices:
                b = max(b, max((abs(x) for x in v), default=Fraction(0)))
            s = max(s, max((abs(x) for x in cone.shift), default=Fraction(0)))
        return b, s

    def window_points(self, k: int, radius: int) -> Iterable[tuple[int, ...]]:
        return itertools.product(range(-radius, radius + 1), repeat=self.dim)

    def support_points(self, k: int) -> list[tuple[int, ...]]:
        """Lattice points of the union of bounded slices at level k."""
        pts = set()
        for _, cone in self.pieces:
            if not cone.base.is_bounded():
                raise PiecewiseError("support is unbounded; use a window")
            pts.update(enumerate_lattice_points(cone.slice(k)))
        return sorted(pts)

    def __repr__(self):
        parts = [f"({q.format()})*[C({cone.base!r}, {tuple(str(s) for s in cone.shift)})]" for q, cone in self.pieces]
        return "PiecewiseQP(" + " + ".join(parts) + ")" if parts else "PiecewiseQP(0)"


# ---------------------------------------------------------------------- windows and equality


def default_window(ms: Sequence[PiecewiseQP], k_max: int | None = None) -> tuple[int, Callable[[int], int]]:
    """Window (K, radius(k)) large enough to contain all bounded supports and several periods."""
    period = lcm_all([m.period_bound() for m in ms] + [1])
    b, s = Fraction(0), Fraction(0)
    for m in ms:
        mb, ms_ = m.support_radius()
        b, s = max(b, mb), max(s, ms_)
    kk = k_max if k_max is not None else max(8, 2 * period + 2)
    return kk, lambda k: int(math.ceil(b * k + s)) + 2


def equal_on_window(m1: PiecewiseQP, m2: PiecewiseQP, k_max: int | None = None,
                    radius: Callable[[int], int] | None = None) -> tuple[bool, tuple | None]:
    """Exact pointwise comparison on {1 <= k <= K} x box; returns (ok, first mismatch)."""
    kk, rad = default_window([m1, m2], k_max)
    rad = radius or rad
    diff = m1 - m2
    for k in range(1, kk + 1):
        r = rad(k)
        for lam in itertools.product(range(-r, r + 1), repeat=m1.dim):
            v = diff.evaluate(k, lam)
            if v:
                return False, (k, lam, v)
    return True, None


# ---------------------------------------------------------------------- finite differences and kernel


@dataclass(frozen=True)
class KernelWitness:
    eta: tuple[int, ...]
    zeta_u: Fraction
    order: int
    method: str


def pqp_kernel_witness(m: PiecewiseQP, candidates: Sequence[tuple[Sequence[int], object]], n_max: int,
                       k_max: int | None = None) -> KernelWitness | None:
    """First candidate (eta, zeta, N) with (nabla_eta^zeta)^N m = 0.

    Zero is certified structurally when the iterated difference cancels cone by
    cone, and otherwise by exact evaluation on a window.
    """
    for eta, zeta_u in candidates:
        eta = tuple(int(x) for x in eta)
        zeta_u = frac_part(to_fraction(zeta_u))
        cur = m
        for n in range(1, n_max + 1):
            cur = cur.difference(eta, zeta_u).combined()
            if cur.structurally_zero():
                return KernelWitness(eta, zeta_u, n, "structural")
            ok, _ = equal_on_window(cur, PiecewiseQP(m.dim), k_max)
            if ok:
                return KernelWitness(eta, zeta_u, n, "window")
    return None


# ---------------------------------------------------------------------- tangent cones


def tangent_cone_map(m: PiecewiseQP, v: Sequence) -> PiecewiseQP:
    """T_v m: replace each P by its tangent cone at v (dropping pieces with v outside P)."""
    v = vec(v)
    out = []
    for q, cone in m.pieces:
        t = cone.base.tangent_cone(v)
        if not t.is_empty():
            out.append((q, ShiftedCone.of(t, cone.shift)))
    return PiecewiseQP(m.dim, out)


@dataclass(frozen=True)
class LocalWindow:
    """A box v + [-rho, rho]^d and a threshold K such that T_v m = m on C_box for k > K."""

    center: Vector
    rho: Fraction
    k_threshold: int


def local_agreement_window(m: PiecewiseQP, v: Sequence) -> LocalWindow:
    v = vec(v)
    rho = Fraction(1)
    kk = 1
    for _, cone in m.pieces:
        for a, c in cone.base.rows:
            val = dot(a, v) - c
            if val == 0:
                continue
            gap = abs(val)
            norm1 = sum(abs(x) for x in a)
            rho = min(rho, gap / (3 * norm1))
            shift = abs(dot(a, cone.shift))
            if shift:
                kk = max(kk, math.floor(3 * shift / gap) + 1)
    return LocalWindow(v, rho, kk)


def check_local_agreement(m: PiecewiseQP, v: Sequence, extra_levels: int = 6) -> tuple[bool, LocalWindow, tuple | None]:
    """Brute-force comparison of m and T_v m on C_box for k = K+1 .. K+extra_levels."""
    win = local_agreement_window(m, v)
    t = tangent_cone_map(m, v)
    d = m.dim
    for k in range(win.k_threshold + 1, win.k_threshold + extra_levels + 1):
        lo = [ceil_fraction((c - win.rho) * k) for c in win.center]
        hi = [math.floor((c + win.rho) * k) for c in win.center]
        for lam in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            if m.evaluate(k, lam) != t.evaluate(k, lam):
                return False, win, (k, lam)
    return True, win, None


# ---------------------------------------------------------------------- shift reduction


@dataclass(frozen=True)
class Correction:
    sign: int
    cone: ShiftedCone


def shift_reduction(base: Polyhedron, sigma: Sequence) -> list[Correction]:
    """Express [C_P] - [C_{P, sigma}] as a signed sum of lower-dimensional shifted cones.

    P must be a half-space, or a simple cone (an affine subspace cut by linearly
    independent inequalities) with sigma parallel to its affine hull.  The
    inequalities are peeled one at a time; each peel contributes the lattice
    hyperplanes <mu, lambda> + k c = s that separate the two shifts.
    """
    sigma = vec(sigma)
    d = base.d
    if not any(sigma):
        return []
    if base.is_empty():
        raise PiecewiseError("empty polyhedron")
    eqs = sorted(base.implicit_equalities())
    ineq_rows = [base.rows[i] for i in range(len(base.rows)) if i not in eqs]
    eq_rows = []
    for i in eqs:
        a, c = base.rows[i]
        if not any(dot(a, r[0]) == -dot(a, a) and r[1] == -c for r in eq_rows):
            eq_rows.append((a, c))
    for a, c in eq_rows:
        if dot(a, sigma) != 0:
            raise PiecewiseError("shift must be parallel to the affine hull of P")
    from .linalg import rank

    if ineq_rows and rank([a for a, _ in ineq_rows]) < len(ineq_rows):
        raise PiecewiseError("shift reduction needs linearly independent facet inequalities")
    equalities = [(a, c) for a, c in eq_rows]
    out: list[Correction] = []
    # shifts applied to each inequality: first j inequalities unshifted, the rest shifted
    for j, (a, c) in enumerate(ineq_rows):
        before = ineq_rows[:j]
        after = ineq_rows[j + 1:]
        n_steps, mu, cc = _integral_form(a, c, sigma)
        if n_steps == 0:
            continue
        sign = 1 if n_steps > 0 else -1
        # [H] - [H_sigma] = sum_{s=0}^{n-1} [<mu,lambda> + k cc = s]   (n > 0)
        #                 = - sum_{s=1}^{|n|} [<mu,lambda> + k cc = -s] (n < 0)
        values = range(0, n_steps) if n_steps > 0 else range(-1, n_steps - 1, -1)
        g = math.gcd(*(int(x) for x in mu), int(cc)) if any(mu) else abs(int(cc))
        for s in values:
            if g and s % g:
                continue
            # the correction cone: equality <mu, x> + cc = s/k, i.e. shift tau with <mu, tau> = s
            tau_parts = [(mu, Fraction(s))]
            tau_parts += [(b, Fraction(0)) for b, _ in before]
            tau_parts += [(b, dot(b, sigma)) for b, _ in after]
            tau_parts += [(b, Fraction(0)) for b, _ in equalities]
            tau = solve([list(t[0]) for t in tau_parts], [t[1] for t in tau_parts])
            if tau is None:
                raise PiecewiseError("incompatible shifts in shift reduction")
            rows = [(b, cb) for b, cb in before] + [(b, cb) for b, cb in after]
            rows += [(mu, -cc), (tuple(-x for x in mu), cc)]
            for b, cb in equalities:
                rows += [(b, cb), (tuple(-x for x in b), -cb)]
            out.append(Correction(sign, ShiftedCone.of(Polyhedron(rows, d), tau)))
    return out


def _integral_form(a: Sequence[Fraction], c: Fraction, sigma: Sequence[Fraction]):
    """Scale <a, x> >= c to <mu, x> + cc >= 0 with mu integral, cc and <mu, sigma> integers."""
    den = 1
    for x in list(a) + [c, dot(a, sigma)]:
        den = den * Fraction(x).denominator // math.gcd(den, Fraction(x).denominator)
    mu = tuple(Fraction(x * den) for x in a)
    cc = -c * den
    return int(dot(mu, sigma)), mu, cc


def check_shift_reduction(base: Polyhedron, sigma: Sequence, corrections: Sequence[Correction],
                          k_max: int = 8, radius: int | None = None) -> bool:
    lhs = PiecewiseQP.indicator(base) - PiecewiseQP.indicator(base, sigma)
    rhs = PiecewiseQP(base.d, [(QuasiPolynomial.const(base.d, c.sign), c.cone) for c in corrections])
    r = radius
    if r is None:
        extent = max([abs(x) for v in base.vertices for x in v] + [Fraction(1)])
        s = max([abs(x) for x in vec(sigma)] + [Fraction(0)])
        return equal_on_window(lhs, rhs, k_max, lambda k: int(extent * k + s) + 3)[0]
    return equal_on_window(lhs, rhs, k_max, lambda k: r)[0]


# ---------------------------------------------------------------------- polarization


def pqp_polarize(m: PiecewiseQP, betas: Sequence | None = None):
    """Pointwise-equal form of m on cones with a common polarizing half-space per apex set.

    Returns the new PiecewiseQP and the decomposition with its half-space certificates.
    """
    from .polyhedra import polarized_cone_decomposition

    decomp = polarized_cone_decomposition([(cone.base, cone.shift) for _, cone in m.pieces], betas)
    out = [(m.pieces[c.tag][0] * c.sign, ShiftedCone.of(c.cone, c.shift)) for c in decomp.cones]
    return PiecewiseQP(m.dim, out), decomp
