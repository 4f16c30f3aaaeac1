"""Exact scalars: rationals, cyclotomic numbers, k-periodic tables and polynomials.

Cyclotomic numbers live in Q(zeta_N) and are stored as the remainder of a
polynomial in zeta_N modulo the N-th cyclotomic polynomial.  Mixed levels are
lifted to the lcm of the levels before any arithmetic.
"""

from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

Scalar = Union[int, Fraction, "Cyclotomic", "Periodic"]


class ScalarError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    """Parse ints, Fractions and strings like "p/q" into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ScalarError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        text = x.strip()
        num, sep, den = text.partition("/")
        try:
            n = int(num)
            d = int(den) if sep else 1
        except ValueError as exc:
            raise ScalarError(f"malformed rational: {x!r}") from exc
        if d == 0:
            raise ScalarError(f"malformed rational (zero denominator): {x!r}")
        return Fraction(n, d)
    if isinstance(x, Cyclotomic) and x.level == 1:
        return x.coeffs[0]
    raise ScalarError(f"not a rational: {x!r}")


def format_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def frac_part(x: Fraction) -> Fraction:
    return x - math.floor(x)


def ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def lcm_all(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


# --------------------------------------------------------------------------
# cyclotomic polynomials and power tables


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the n-th cyclotomic polynomial."""
    if n < 1:
        raise ScalarError(f"invalid level {n}")
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _exact_divide(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _exact_divide(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    lead = den[-1]
    for i in range(len(out) - 1, -1, -1):
        q, r = divmod(num[i + len(den) - 1], lead)
        if r:
            raise ScalarError("inexact polynomial division")
        out[i] = q
        for j, c in enumerate(den):
            num[i + j] -= q * c
    if any(num):
        raise ScalarError("inexact polynomial division")
    return out


@lru_cache(maxsize=None)
def totient(n: int) -> int:
    return len(cyclotomic_polynomial(n)) - 1


@lru_cache(maxsize=None)
def _power_table(n: int) -> tuple[tuple[int, ...], ...]:
    """Row j holds x^j mod Phi_n, for j = 0..n-1."""
    phi = cyclotomic_polynomial(n)
    deg = len(phi) - 1
    rows = []
    cur = [0] * deg
    cur[0] = 1
    for _ in range(n):
        rows.append(tuple(cur))
        top = cur[-1]
        nxt = [0] + cur[:-1]
        if top:
            nxt = [a - top * b for a, b in zip(nxt, phi[:-1])]
        cur = nxt
    return tuple(rows)


def _reduce(raw: Sequence, n: int) -> tuple[Fraction, ...]:
    table = _power_table(n)
    deg = totient(n)
    out = [Fraction(0)] * deg
    for j, c in enumerate(raw):
        if c:
            row = table[j % n]
            for i in range(deg):
                if row[i]:
                    out[i] += c * row[i]
    return tuple(out)


def _reduce_int(raw: Sequence[int], n: int) -> list[int]:
    table = _power_table(n)
    deg = totient(n)
    out = [0] * deg
    for j, c in enumerate(raw):
        if c:
            row = table[j % n]
            for i in range(deg):
                if row[i]:
                    out[i] += c * row[i]
    return out


def _common_denominator(coeffs: Sequence[Fraction]) -> tuple[list[int], int]:
    den = lcm_all(c.denominator for c in coeffs)
    return [c.numerator * (den // c.denominator) for c in coeffs], den


# --------------------------------------------------------------------------


class Cyclotomic:
    """Exact element of Q(zeta_N), zeta_N = exp(2 pi i / N).

    Stored as integer numerators over one positive denominator, in lowest terms.
    """

    __slots__ = ("level", "nums", "den", "_hash")

    def __init__(self, level: int, coeffs: Sequence, *, _reduced: bool = False):
        if level < 1:
            raise ScalarError(f"invalid level {level}")
        fr = [c if isinstance(c, Fraction) else to_fraction(c) for c in coeffs]
        if not _reduced:
            fr = list(_reduce(fr, level))
        nums, den = _common_denominator(fr)
        self._set(level, nums, den)

    def _set(self, level: int, nums: Sequence[int], den: int):
        if level == 2 or (level > 1 and not any(nums[1:])):
            level, nums = 1, nums[:1]
        g = den
        for x in nums:
            if x:
                g = math.gcd(g, x)
                if g == 1:
                    break
        if not any(nums):
            g = den
        self.level = level
        self.nums = tuple(x // g for x in nums)
        self.den = den // g
        self._hash = None

    @staticmethod
    def _make(level: int, nums: Sequence[int], den: int) -> "Cyclotomic":
        out = object.__new__(Cyclotomic)
        out._set(level, list(nums), den)
        return out

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.den) for x in self.nums)

    # construction helpers
    @staticmethod
    def rational(x) -> "Cyclotomic":
        x = to_fraction(x)
        return Cyclotomic._make(1, (x.numerator,), x.denominator)

    @staticmethod
    def root(n: int, e: int = 1) -> "Cyclotomic":
        """zeta_n ** e."""
        if n < 1:
            raise ScalarError(f"invalid level {n}")
        e %= n
        g = math.gcd(e, n)
        n, e = n // g, e // g
        return Cyclotomic._make(n, _power_table(n)[e], 1)

    @staticmethod
    def exp2pi(r) -> "Cyclotomic":
        """exp(2 pi i r) for rational r."""
        r = to_fraction(r)
        return Cyclotomic.root(r.denominator, r.numerator)

    # internal
    def _lift_nums(self, m: int) -> Sequence[int]:
        if m % self.level:
            raise ScalarError(f"cannot lift level {self.level} to {m}")
        if m == self.level:
            return self.nums
        step = m // self.level
        table = _power_table(m)
        deg = totient(m)
        out = [0] * deg
        for i, c in enumerate(self.nums):
            if c:
                row = table[(i * step) % m]
                for j in range(deg):
                    if row[j]:
                        out[j] += c * row[j]
        return out

    def lift(self, m: int) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.den) for x in self._lift_nums(m))

    def _coerce(self, other):
        if isinstance(other, Cyclotomic):
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return Cyclotomic._make(1, (other,), 1)
        if isinstance(other, Fraction):
            return Cyclotomic._make(1, (other.numerator,), other.denominator)
        return None

    # arithmetic
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        m = self.level if self.level == o.level else lcm_all((self.level, o.level))
        a, b = self._lift_nums(m), o._lift_nums(m)
        if self.den == o.den:
            return Cyclotomic._make(m, [x + y for x, y in zip(a, b)], self.den)
        return Cyclotomic._make(m, [x * o.den + y * self.den for x, y in zip(a, b)], self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic._make(self.level, [-c for c in self.nums], self.den)

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
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = self.den * o.den
        if o.level == 1:
            c = o.nums[0]
            return Cyclotomic._make(self.level, [x * c for x in self.nums], den)
        if self.level == 1:
            c = self.nums[0]
            return Cyclotomic._make(o.level, [x * c for x in o.nums], den)
        m = self.level if self.level == o.level else lcm_all((self.level, o.level))
        a, b = self._lift_nums(m), o._lift_nums(m)
        raw = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        raw[i + j] += x * y
        return Cyclotomic._make(m, _reduce_int(raw, m), den)

    __rmul__ = __mul__

    def inverse(self) -> "Cyclotomic":
        if not self:
            raise ZeroDivisionError("inverse of zero cyclotomic")
        if self.level == 1:
            return Cyclotomic(1, (1 / self.coeffs[0],), _reduced=True)
        n, deg = self.level, totient(self.level)
        # column j = self * x^j reduced
        cols = []
        for j in range(deg):
            raw = [Fraction(0)] * j + list(self.coeffs)
            cols.append(_reduce(raw, n))
        matrix = [[cols[j][i] for j in range(deg)] for i in range(deg)]
        rhs = [Fraction(1)] + [Fraction(0)] * (deg - 1)
        from .linalg import solve

        sol = solve(matrix, rhs)
        return Cyclotomic(n, tuple(sol), _reduced=True)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return self.inverse() ** (-e)
        out = Cyclotomic(1, (Fraction(1),), _reduced=True)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def conjugate(self) -> "Cyclotomic":
        n = self.level
        raw = [Fraction(0)] * n
        for i, c in enumerate(self.coeffs):
            raw[(-i) % n] += c
        return Cyclotomic(n, _reduce(raw, n), _reduced=True)

    # comparison
    def __bool__(self):
        return any(self.nums)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.level == o.level:
            return self.den == o.den and self.nums == o.nums
        m = lcm_all((self.level, o.level))
        return [x * o.den for x in self._lift_nums(m)] == [y * self.den for y in o._lift_nums(m)]

    def minimal_level(self) -> int:
        if self.level == 1:
            return 1
        for d in sorted(_divisors(self.level)):
            if d == self.level:
                return d
            if self._descends_to(d):
                return d
        return self.level

    def _descends_to(self, d: int) -> bool:
        # solve lift(y) == self for y at level d
        deg_d = totient(d)
        basis = [Cyclotomic(d, tuple(Fraction(int(i == j)) for i in range(deg_d)), _reduced=True).lift(self.level)
                 for j in range(deg_d)]
        from .linalg import solve

        matrix = [[basis[j][i] for j in range(deg_d)] for i in range(len(self.coeffs))]
        return solve(matrix, list(self.coeffs)) is not None

    def at_level(self, d: int) -> "Cyclotomic":
        """Re-express at a level d dividing self.level when possible."""
        if d == self.level:
            return self
        deg_d = totient(d)
        basis = [Cyclotomic(d, tuple(Fraction(int(i == j)) for i in range(deg_d)), _reduced=True).lift(self.level)
                 for j in range(deg_d)]
        from .linalg import solve

        matrix = [[basis[j][i] for j in range(deg_d)] for i in range(len(self.coeffs))]
        sol = solve(matrix, list(self.coeffs))
        if sol is None:
            raise ScalarError(f"element not in level {d}")
        return Cyclotomic(d, tuple(sol), _reduced=True)

    def __hash__(self):
        if self._hash is None:
            if self.level == 1:
                self._hash = hash(self.coeffs[0])
            else:
                low = self.at_level(self.minimal_level())
                self._hash = hash((low.level, low.coeffs)) if low.level > 1 else hash(low.coeffs[0])
        return self._hash

    def is_rational(self) -> bool:
        return self.level == 1 or self.minimal_level() == 1

    def to_fraction(self) -> Fraction:
        if self.level == 1:
            return self.coeffs[0]
        low = self.at_level(self.minimal_level())
        if low.level != 1:
            raise ScalarError("cyclotomic number is not rational")
        return low.coeffs[0]

    def to_complex(self) -> complex:
        n = self.level
        return sum(float(c) * cmath.exp(2j * math.pi * i / n) for i, c in enumerate(self.coeffs))

    def __repr__(self):
        return f"Cyclotomic({self.level}, {[format_fraction(c) for c in self.coeffs]})"

    def __str__(self):
        if self.level == 1:
            return format_fraction(self.coeffs[0])
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            mono = "" if i == 0 else (f"z{self.level}" if i == 1 else f"z{self.level}^{i}")
            if not mono:
                parts.append(format_fraction(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{format_fraction(c)}*{mono}")
        return "(" + " + ".join(parts).replace("+ -", "- ") + ")" if len(parts) > 1 else parts[0]

    def to_json(self):
        return {"level": self.level, "coeffs": [format_fraction(c) for c in self.coeffs]}


@lru_cache(maxsize=None)
def _divisors(n: int) -> tuple[int, ...]:
    return tuple(d for d in range(1, n + 1) if n % d == 0)


def cyclotomic_normalize(raw: Sequence, level: int) -> Cyclotomic:
    """Reduce a raw coefficient vector in zeta_level modulo Phi_level."""
    if level < 1:
        raise ScalarError(f"invalid level {level}")
    return Cyclotomic(level, [to_fraction(c) for c in raw])


def root_of_unity_power(order: int, exponent) -> Cyclotomic:
    """zeta_order ** exponent; the exponent must be an integer."""
    if order < 1:
        raise ScalarError(f"invalid level {order}")
    e = to_fraction(exponent)
    if e.denominator != 1:
        raise ScalarError(f"exponent {e} is not integral at level {order}")
    return Cyclotomic.root(order, e.numerator)


def as_cyclotomic(x) -> Cyclotomic:
    if isinstance(x, Cyclotomic):
        return x
    return Cyclotomic(1, (to_fraction(x),), _reduced=True)


def scalar_from_json(obj):
    if isinstance(obj, dict):
        return Cyclotomic(int(obj["level"]), [to_fraction(c) for c in obj["coeffs"]])
    return to_fraction(obj)


def scalar_to_json(x):
    if isinstance(x, Cyclotomic):
        if x.level == 1:
            return format_fraction(x.coeffs[0])
        return x.to_json()
    return format_fraction(to_fraction(x))


def simplify_scalar(x):
    """Return a Fraction when x is rational, else x."""
    if isinstance(x, Cyclotomic) and x.level == 1:
        return Fraction(x.nums[0], x.den)
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    return x


# --------------------------------------------------------------------------


class Periodic:
    """A function of k in Z that is periodic: value at k is values[k mod D]."""

    __slots__ = ("values", "_hash")

    def __init__(self, values: Sequence):
        vals = tuple(simplify_scalar(v) for v in values)
        if not vals:
            raise ScalarError("empty periodic table")
        self.values = _minimal_period(vals)
        self._hash = None

    @staticmethod
    def const(x) -> "Periodic":
        return Periodic((x,))

    @property
    def period(self) -> int:
        return len(self.values)

    def at(self, k: int):
        return self.values[k % len(self.values)]

    def _binary(self, other, op):
        if not isinstance(other, Periodic):
            if isinstance(other, (int, Fraction, Cyclotomic)) and not isinstance(other, bool):
                return Periodic(tuple(op(v, other) for v in self.values))
            return NotImplemented
        d = lcm_all((self.period, other.period))
        return Periodic(tuple(op(self.at(r), other.at(r)) for r in range(d)))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Periodic):
            return NotImplemented
        return self._binary(other, lambda a, b: a / b)

    def __neg__(self):
        return Periodic(tuple(-v for v in self.values))

    def __bool__(self):
        return any(bool(v) for v in self.values)

    def __eq__(self, other):
        if isinstance(other, Periodic):
            return self.values == other.values or (
                all(self.at(r) == other.at(r) for r in range(lcm_all((self.period, other.period)))))
        if isinstance(other, (int, Fraction, Cyclotomic)) and not isinstance(other, bool):
            return self.period == 1 and self.values[0] == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.values) if self.period > 1 else hash(self.values[0])
        return self._hash

    def is_constant(self) -> bool:
        return self.period == 1

    def __repr__(self):
        return f"Periodic({[str(v) for v in self.values]})"

    def __str__(self):
        if self.period == 1:
            return str(self.values[0])
        return "[" + ", ".join(str(v) for v in self.values) + f"]_(k mod {self.period})"


def _minimal_period(vals: tuple) -> tuple:
    n = len(vals)
    for p in _divisors(n):
        if p == n:
            break
        if all(vals[i] == vals[i % p] for i in range(p, n)):
            return vals[:p]
    return vals


def periodic_from_function(fn, period: int) -> Periodic:
    return Periodic(tuple(fn(r) for r in range(period)))


# --------------------------------------------------------------------------


def _is_zero(c) -> bool:
    return not c


class Poly:
    """Sparse multivariate polynomial with exact coefficients.

    Coefficients may be Fractions, Cyclotomic numbers or Periodic tables.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        self.nvars = nvars
        clean = {}
        if terms:
            for e, c in terms.items():
                if len(e) != nvars:
                    raise ScalarError(f"exponent {e} does not match {nvars} variables")
                c = simplify_scalar(c)
                if not _is_zero(c):
                    clean[tuple(e)] = c
        self.terms = clean

    @staticmethod
    def const(nvars: int, c) -> "Poly":
        return Poly(nvars, {(0,) * nvars: c})

    @staticmethod
    def var(nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return Poly(nvars, {tuple(e): Fraction(1)})

    @staticmethod
    def monomial(exps: Sequence[int], c=Fraction(1)) -> "Poly":
        return Poly(len(exps), {tuple(exps): c})

    @staticmethod
    def linear(coeffs: Sequence, const=Fraction(0)) -> "Poly":
        n = len(coeffs)
        terms = {}
        for i, a in enumerate(coeffs):
            a = to_fraction(a) if not isinstance(a, (Cyclotomic, Periodic)) else a
            if a:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = a
        if const:
            terms[(0,) * n] = const
        return Poly(n, terms)

    def copy(self) -> "Poly":
        p = Poly(self.nvars)
        p.terms = dict(self.terms)
        return p

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ScalarError("polynomial variable count mismatch")
            return other
        if isinstance(other, (int, Fraction, Cyclotomic, Periodic)) and not isinstance(other, bool):
            return Poly.const(self.nvars, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms = dict(self.terms)
        for e, c in o.terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return Poly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

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
        if isinstance(other, (int, Fraction, Cyclotomic, Periodic)) and not isinstance(other, bool):
            if _is_zero(other):
                return Poly(self.nvars)
            return Poly(self.nvars, {e: c * other for e, c in self.terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = c1 * c2
                terms[e] = terms[e] + v if e in terms else v
        return Poly(self.nvars, terms)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int):
        out = Poly.const(self.nvars, Fraction(1))
        for _ in range(n):
            out = out * self
        return out

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).terms == {}

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, idx: Iterable[int]) -> int:
        idx = list(idx)
        return max((sum(e[i] for i in idx) for e in self.terms), default=-1)

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def derivative(self, i: int, order: int = 1) -> "Poly":
        terms: dict = {}
        for e, c in self.terms.items():
            if e[i] < order:
                continue
            f = math.perm(e[i], order)
            ne = list(e)
            ne[i] -= order
            terms[tuple(ne)] = c * f
        return Poly(self.nvars, terms)

    def partial(self, alpha: Sequence[int]) -> "Poly":
        out = self
        for i, a in enumerate(alpha):
            if a:
                out = out.derivative(i, a)
        return out

    def directional_derivative(self, direction: Sequence) -> "Poly":
        if len(direction) != self.nvars:
            raise ScalarError("direction dimension mismatch")
        out = Poly(self.nvars)
        for i, a in enumerate(direction):
            a = to_fraction(a) if not isinstance(a, Cyclotomic) else a
            if a:
                out = out + self.derivative(i) * a
        return out

    def evaluate(self, point: Sequence):
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, a in zip(point, e):
                if a:
                    v = v * (x ** a)
            total = total + v
        return simplify_scalar(total)

    def compose(self, images: Sequence["Poly"]) -> "Poly":
        """Substitute variable i by images[i] (all in a common ring)."""
        if len(images) != self.nvars:
            raise ScalarError("composition arity mismatch")
        if not images:
            return self.copy()
        m = images[0].nvars
        powers: list[dict[int, Poly]] = [{0: Poly.const(m, Fraction(1))} for _ in images]

        def power(i, a):
            cache = powers[i]
            if a not in cache:
                cache[a] = power(i, a - 1) * images[i]
            return cache[a]

        out = Poly(m)
        acc: dict = {}
        for e, c in self.terms.items():
            term = Poly.const(m, c)
            for i, a in enumerate(e):
                if a:
                    term = term * power(i, a)
            for e2, c2 in term.terms.items():
                acc[e2] = acc[e2] + c2 if e2 in acc else c2
        out = Poly(m, acc)
        return out

    def affine_substitute(self, matrix: Sequence[Sequence], offset: Sequence) -> "Poly":
        """p(M y + b) as a polynomial in y; matrix has nvars rows."""
        m = len(matrix[0]) if matrix else 0
        images = [Poly.linear(row, to_fraction(b)) if m else Poly.const(0, to_fraction(b))
                  for row, b in zip(matrix, offset)]
        return self.compose(images)

    def embed(self, nvars: int, positions: Sequence[int]) -> "Poly":
        """Rename variable i to position positions[i] in a ring with nvars variables."""
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for i, a in enumerate(e):
                ne[positions[i]] += a
            terms[tuple(ne)] = c
        return Poly(nvars, terms)

    def map_coeffs(self, fn) -> "Poly":
        return Poly(self.nvars, {e: fn(c) for e, c in self.terms.items()})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-a for a in t[0])))

    def format(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(n if a == 1 else f"{n}^{a}" for n, a in zip(names, e) if a)
            cs = str(c)
            if not mono:
                parts.append(cs)
            elif cs == "1":
                parts.append(mono)
            elif cs == "-1":
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"Poly({self.nvars}, {self.format([f'x{i}' for i in range(self.nvars)])})"


def poly_directional_derivative(p: Poly, direction: Sequence) -> Poly:
    return p.directional_derivative(direction)


def multinomial_power(linear: Sequence, power: int) -> dict[tuple, Fraction]:
    """Expand (sum_i linear[i] * xi_i) ** power as exponent -> coefficient."""
    n = len(linear)
    out: dict[tuple, Fraction] = {}
    if power == 0:
        return {(0,) * n: Fraction(1)}
    support = [i for i, a in enumerate(linear) if a]
    for combo in itertools.combinations_with_replacement(support, power):
        e = [0] * n
        for i in combo:
            e[i] += 1
        key = tuple(e)
        if key in out:
            continue
        coef = Fraction(math.factorial(power))
        for i in support:
            coef /= math.factorial(e[i])
            coef *= Fraction(linear[i]) ** e[i]
        out[key] = coef
    return {k: v for k, v in out.items() if v}
