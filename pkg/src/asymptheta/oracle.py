"""Independent verification paths.

oracle_theta_pair re-implements the windowed pairing by a direct loop over the
integer box, sharing no code with the distributions module.  The remaining
checks are numeric (mpmath) or search-based.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath

from .bernoulli import zeta_bernoulli
from .linalg import coords_in_basis, det
from .piecewise import PiecewiseQP, ShiftedCone
from .polyhedra import Polyhedron, triangulate_cone
from .scalars import Cyclotomic, Periodic, Poly, lcm_all, to_fraction


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------- brute-force pairing


def _exp2pi(x: Fraction) -> Cyclotomic:
    return Cyclotomic.exp2pi(x - math.floor(x))


def _poly_value(p: Poly, point: Sequence[Fraction]):
    total = Fraction(0)
    for exps, c in p.terms.items():
        term = Fraction(1)
        for x, a in zip(point, exps):
            term *= x ** a
        total = c * term + total
    return total


def _in_slice(rows, k: int, shift, lam) -> bool:
    # (lam - shift) / k in P  <=>  <a, lam - shift> >= k c
    for a, c in rows:
        lhs = sum((ai * (Fraction(li) - si) for ai, li, si in zip(a, lam, shift)), Fraction(0))
        if lhs < k * c:
            return False
    return True


def oracle_theta_pair(m: PiecewiseQP, k: int, phi: Poly, lo: Sequence, hi: Sequence,
                      lo_closed: Sequence[bool] | None = None, hi_closed: Sequence[bool] | None = None):
    """sum over lambda with lambda/k in the box of m(k, lambda) phi(lambda/k), by a direct loop."""
    d = m.dim
    lo = [to_fraction(x) for x in lo]
    hi = [to_fraction(x) for x in hi]
    lo_closed = list(lo_closed) if lo_closed is not None else [True] * d
    hi_closed = list(hi_closed) if hi_closed is not None else [True] * d
    ranges = [range(math.floor(a * k) - 1, math.floor(b * k) + 2) for a, b in zip(lo, hi)]
    total = Fraction(0)
    for lam in itertools.product(*ranges):
        x = [Fraction(v, k) for v in lam]
        inside = True
        for xi, a, b, ca, cb in zip(x, lo, hi, lo_closed, hi_closed):
            if xi < a or xi > b or (xi == a and not ca) or (xi == b and not cb):
                inside = False
                break
        if not inside:
            continue
        weight = Fraction(0)
        for q, cone in m.pieces:
            if not _in_slice(cone.base.rows, k, cone.shift, lam):
                continue
            point = [Fraction(k)] + [Fraction(v) for v in lam]
            for (u, g), p in q.terms.items():
                phase = _exp2pi(u * k + sum((gi * li for gi, li in zip(g, lam)), Fraction(0)))
                weight = phase * _poly_value(p, point) + weight
        if weight:
            total = weight * _poly_value(phi, x) + total
    if isinstance(total, Cyclotomic) and total.is_rational():
        return total.to_fraction()
    return total


# ---------------------------------------------------------------------- numeric remainder tables


def _to_mp(x):
    if isinstance(x, Cyclotomic):
        z = x.to_complex()
        return mpmath.mpc(z.real, z.imag) if z.imag else mpmath.mpf(z.real)
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpmathify(x)


def _face_integral(f: Polyhedron, integrand: Callable) -> object:
    """Integral over a bounded polytope with its lattice-normalized measure."""
    verts = f.vertices
    if f.dim == 0:
        return integrand([_to_mp(x) for x in verts[0]])
    if f.dim > 3:
        raise OracleError("numeric face integration supports faces of dimension at most 3")
    basis = f.lattice_basis
    total = mpmath.mpf(0)
    lifted = [(Fraction(1),) + v for v in verts]
    e = f.dim
    for sign, cell in triangulate_cone(lifted):
        if len(cell) != e + 1:
            continue
        simplex = [verts[i] for i in cell]
        diffs = [[a - b for a, b in zip(v, simplex[0])] for v in simplex[1:]]
        jac = abs(det([coords_in_basis(basis, dv) for dv in diffs]))
        v0 = [_to_mp(x) for x in simplex[0]]
        dm = [[_to_mp(x) for x in dv] for dv in diffs]

        def collapsed(*u):
            # Duffy map from the unit cube onto the standard simplex
            t, rest, w = [], mpmath.mpf(1), mpmath.mpf(1)
            for ui in u:
                t.append(rest * ui)
                w *= rest
                rest *= 1 - ui
            x = [v0[i] + sum(tj * dm[j][i] for j, tj in enumerate(t)) for i in range(len(v0))]
            return integrand(x) * w

        val = mpmath.quad(collapsed, *([[0, 1]] * e))
        total += sign * _to_mp(jac) * val
    return total


def numeric_series_pair(series, k: int, phi: Callable) -> object:
    """<A(k), phi> for a smooth numeric phi, with derivatives and integrals from mpmath."""
    total = mpmath.mpf(0)
    for e, rd in series.by_exponent.items():
        for (f, alpha, beta), c in rd.terms.items():
            ck = c.at(k) if isinstance(c, Periodic) else c
            if not ck:
                continue
            if not f.is_bounded():
                raise OracleError("numeric pairing needs bounded faces")

            def integrand(x, alpha=alpha, beta=beta):
                mono = mpmath.mpf(1)
                for xi, b in zip(x, beta):
                    mono *= xi ** b
                if any(alpha):
                    dval = mpmath.diff(lambda *y: phi(*y), tuple(x), tuple(alpha))
                else:
                    dval = phi(*x)
                return mono * dval

            sign = -1 if sum(alpha) % 2 else 1
            total += sign * _to_mp(ck) * _face_integral(f, integrand) * mpmath.mpf(k) ** e
    return total


def numeric_theta_pair(m: PiecewiseQP, k: int, phi: Callable) -> object:
    from .distributions import theta_atoms_global

    total = mpmath.mpf(0)
    for x, w in theta_atoms_global(m, k).atoms:
        total += _to_mp(w) * phi(*[_to_mp(v) for v in x])
    return total


@dataclass
class RemainderReport:
    ks: list[int]
    remainders: list[float]
    scaled: list[float]
    order: int
    exponent: int
    precision: str
    band: float
    verdict: str
    exact: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "k": self.ks, "remainder": self.remainders, "scaled_remainder": self.scaled,
            "order": self.order, "exponent": self.exponent, "precision": self.precision,
            "band": self.band, "verdict": self.verdict, "exact": self.exact}, indent=2)

    def format_table(self) -> str:
        lines = [f"# order N={self.order}, leading exponent s={self.exponent}, precision {self.precision}",
                 f"{'k':>6} {'|remainder|':>24} {'scaled':>24}"]
        for k, r, s in zip(self.ks, self.remainders, self.scaled):
            lines.append(f"{k:>6} {r:>24.12e} {s:>24.12e}")
        lines.append(f"verdict: {self.verdict} (band {self.band}x)")
        return "\n".join(lines)


def remainder_table(m: PiecewiseQP, phi, order: int, ks: Sequence[int], band: float = 2.0,
                    dps: int = 30) -> RemainderReport:
    """Scaled remainders |<Theta(m;k), phi> - <A_N(m;k), phi>| k^(N - s).

    phi is either a Poly (exact path) or a callable on mpmath numbers.  The verdict
    is bounded when no scaled remainder exceeds band times the first one (or the
    absolute precision floor).
    """
    from .distributions import theta_pair_poly
    from .expansion import expand

    series = expand(m, order)
    s = series.s
    ks = list(ks)
    rems, scaled = [], []
    if isinstance(phi, Poly):
        for k in ks:
            r = theta_pair_poly(m, k, phi) - series.pair(k, phi)
            r = abs(complex(r.to_complex()) if isinstance(r, Cyclotomic) else float(r))
            rems.append(r)
            scaled.append(r * float(k) ** (order - s))
        verdict = "bounded" if max(scaled, default=0.0) <= band * max(scaled[0] if scaled else 0.0, 0.0) \
            or all(x == 0 for x in scaled) else "unbounded"
        return RemainderReport(ks, rems, scaled, order, s, "exact rational", band, verdict, exact=True)
    with mpmath.workdps(dps):
        for k in ks:
            r = abs(numeric_theta_pair(m, k, phi) - numeric_series_pair(series, k, phi))
            rems.append(float(r))
            scaled.append(float(r * mpmath.mpf(k) ** (order - s)))
    floor = 10.0 ** (-(dps - 10))
    ref = max(scaled[0], floor) if scaled else floor
    verdict = "bounded" if all(x <= band * ref for x in scaled) else "unbounded"
    return RemainderReport(ks, rems, scaled, order, s, f"mpmath {dps} digits", band, verdict)


# ---------------------------------------------------------------------- generating functions


def laurent_coefficients(u, order: int) -> list:
    """c_n with 1/(1 - zeta e^{-w}) = sum_{n=0}^{order} c_n w^{n-1} + O(w^order)."""
    out = []
    for n in range(order + 1):
        b = zeta_bernoulli(n, u).constant_term()
        out.append((-1) ** n * _to_mp(b) / math.factorial(n))
    return out


@dataclass
class GenfuncCheck:
    closed: complex
    laurent: complex
    difference: float


def genfunc_crosscheck(rays: Sequence[Sequence[int]], g: Sequence, z: Sequence, k: int, order: int,
                       dps: int = 30) -> GenfuncCheck:
    """Closed form of sum over the cone's lattice points of g^lambda e^{-i<z,lambda>/k}
    against the truncated Laurent series built from twisted Bernoulli numbers.

    The cone must be unimodular with apex 0; the closed form is a product of
    geometric-series factors 1/(1 - zeta_j e^{-i<z, a_j>/k}).
    """
    rays = [tuple(int(x) for x in r) for r in rays]
    d = len(rays)
    if d == 0 or any(len(r) != d for r in rays):
        raise OracleError("need a square set of generators")
    if abs(det(rays)) != 1:
        raise OracleError("cone is not unimodular")
    g = [to_fraction(x) for x in g]
    with mpmath.workdps(dps):
        zz = [mpmath.mpmathify(complex(x)) for x in z]
        closed = mpmath.mpf(1)
        series = {(): mpmath.mpf(1)}
        for r in rays:
            u = sum((gi * ri for gi, ri in zip(g, r)), Fraction(0))
            u = u - math.floor(u)
            zeta = mpmath.expjpi(2 * _to_mp(u))
            w = 1j * sum(zi * ri for zi, ri in zip(zz, r)) / k
            den = 1 - zeta * mpmath.exp(-w)
            if abs(den) < mpmath.mpf(10) ** (-dps // 2):
                raise OracleError("sample point lies on a pole")
            closed = closed / den
            coeffs = laurent_coefficients(u, order)
            nxt = {}
            for key, val in series.items():
                for n, c in enumerate(coeffs):
                    if c:
                        nxt[key + ((n - 1, w),)] = val * c
            series = nxt
        laurent = mpmath.mpf(0)
        for key, val in series.items():
            if sum(n for n, _ in key) > order - d:
                continue
            term = val
            for n, w in key:
                term *= w ** n
            laurent += term
        diff = abs(closed - laurent)
        return GenfuncCheck(complex(closed), complex(laurent), float(diff))


# ---------------------------------------------------------------------- unicity probes


@dataclass
class UnicityResult:
    witness: tuple | None
    tried: list[tuple] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.witness is None


def default_character_set(m: PiecewiseQP) -> list[tuple[Fraction, ...]]:
    """All g in (Q/Z)^d with denominator dividing 2 lcm(denominators of m's characters)."""
    dens = [1]
    for q, _ in m.pieces:
        for u, g in q.terms:
            dens.extend(x.denominator for x in g)
            dens.append(Fraction(u).denominator)
    n = 2 * lcm_all(dens)
    grid = [Fraction(i, n) for i in range(n)]
    chars = list(itertools.product(grid, repeat=m.dim))
    chars.sort(key=lambda g: (lcm_all([x.denominator for x in g] + [1]), g))
    return chars


def unicity_probe(m: PiecewiseQP, gset: Iterable[Sequence] | None = None, order: int = 2) -> UnicityResult:
    """Search for g with A(g m) != 0 (truncated at the given order)."""
    from .expansion import expand

    chars = default_character_set(m) if gset is None else [tuple(to_fraction(x) for x in g) for g in gset]
    tried = []
    for g in chars:
        tried.append(g)
        series = expand(m.twist(g), order, warn=False)
        if not series.is_zero():
            return UnicityResult(g, tried)
    return UnicityResult(None, tried)


# ---------------------------------------------------------------------- infinite families


@dataclass
class WindowedFamily:
    """A locally finite family sum_{n >= 1} q_n [C_{P_n, sigma_n}] seen through bounded windows.

    piece(n) returns (q_n, ShiftedCone); last_index(k, lo, hi) bounds the indices
    whose slice at level k can meet the box [lo, hi] (scaled coordinates).
    """

    dim: int
    piece: Callable[[int], tuple]
    last_index: Callable[[int, Sequence[Fraction], Sequence[Fraction]], int]

    def truncate(self, k: int, lo: Sequence, hi: Sequence) -> PiecewiseQP:
        lo = [to_fraction(x) for x in lo]
        hi = [to_fraction(x) for x in hi]
        n_max = self.last_index(k, lo, hi)
        return PiecewiseQP(self.dim, [self.piece(n) for n in range(1, n_max + 1)])

    def evaluate(self, k: int, lam: Sequence[int]):
        x = [Fraction(v, k) for v in lam]
        return self.truncate(k, x, x).evaluate(k, lam)


def growing_shifts_family(q: Callable[[int], object] | None = None) -> WindowedFamily:
    """P_n = [-1, 1] x {n} with shift (-n, -n): locally finite although unbounded in n."""
    from .quasipoly import QuasiPolynomial

    def piece(n):
        qn = q(n) if q is not None else QuasiPolynomial.const(2)
        base = Polyhedron([((1, 0), -1), ((-1, 0), -1), ((0, 1), n), ((0, -1), -n)], 2)
        return qn, ShiftedCone.of(base, (-n, -n))

    def last_index(k, lo, hi):
        # slice: x in [-k - n, k - n], y = n (k - 1)
        if k == 1:
            return max(0, math.floor(1 - lo[0] * k))
        return max(0, math.floor(hi[1] * k / (k - 1)))

    return WindowedFamily(2, piece, last_index)


__all__ = [
    "OracleError", "oracle_theta_pair", "numeric_series_pair", "numeric_theta_pair", "RemainderReport",
    "remainder_table", "laurent_coefficients", "GenfuncCheck", "genfunc_crosscheck", "UnicityResult",
    "default_character_set", "unicity_probe", "WindowedFamily", "growing_shifts_family",
]
