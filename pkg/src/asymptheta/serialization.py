"""JSON forms of the core types and scene parsing with path-tagged errors.

Rationals are written "p/q" (integers also accepted on input); cyclotomic
numbers as {"level": N, "coeffs": [...]} in the power basis of zeta_N.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .distributions import AsymptoticSeries, ThetaSample, Window
from .piecewise import PiecewiseQP, ShiftedCone
from .polyhedra import Polyhedron
from .pushforward import QuotientMap
from .quasipoly import QuasiPolynomial
from .scalars import Cyclotomic, Periodic, Poly, format_fraction, scalar_to_json, to_fraction


class SceneError(ValueError):
    """One or more problems located by JSON path."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


class _Fail(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(message)
        self.path = path
        self.message = message


# ---------------------------------------------------------------------- writers


def rational_to_json(x) -> str:
    return format_fraction(to_fraction(x))


def poly_to_json(p: Poly) -> dict:
    return {"nvars": p.nvars,
            "terms": [[list(e), scalar_to_json(c)] for e, c in sorted(p.terms.items(), reverse=True)]}


def qp_to_json(q: QuasiPolynomial) -> dict:
    terms = []
    for (u, g), p in sorted(q.terms.items()):
        terms.append({"u": rational_to_json(u), "g": [rational_to_json(x) for x in g],
                      "poly": poly_to_json(p)["terms"]})
    return {"dim": q.dim, "terms": terms}


def polyhedron_to_json(p: Polyhedron) -> dict:
    """Canonical generator form (vertices reduced modulo lines, primitive rays)."""
    if p.is_empty():
        return {"dim": p.d, "empty": True}
    _, verts, rays, lines = p.key
    out: dict = {"dim": p.d, "vertices": [[rational_to_json(x) for x in v] for v in verts]}
    if rays:
        out["rays"] = [[rational_to_json(x) for x in r] for r in rays]
    if lines:
        out["lines"] = [[rational_to_json(x) for x in r] for r in lines]
    return out


def pqp_to_json(m: PiecewiseQP) -> dict:
    return {"type": "pqp", "dim": m.dim, "pieces": [
        {"q": qp_to_json(q), "base": polyhedron_to_json(c.base), "shift": [rational_to_json(x) for x in c.shift]}
        for q, c in m.pieces]}


def window_to_json(w: Window) -> str:
    return w.format()


def map_to_json(pi: QuotientMap) -> dict:
    return {"type": "map", **pi.to_json()}


def periodic_to_json(c) -> list:
    c = c if isinstance(c, Periodic) else Periodic.const(c)
    return [scalar_to_json(v) for v in c.values]


def series_to_json(a: AsymptoticSeries) -> dict:
    terms = []
    for n in range(a.order + 1):
        e = a.s - n
        rd = a.by_exponent.get(e)
        if rd is None:
            continue
        for (f, alpha, beta), c in rd.sorted_items():
            terms.append({"n": n, "face": polyhedron_to_json(f), "alpha": list(alpha), "beta": list(beta),
                          "coeff": periodic_to_json(c)})
    return {"type": "series", "dim": a.dim, "s": a.s, "order": a.order, "terms": terms}


def theta_to_json(t: ThetaSample) -> dict:
    return {"type": "theta", "k": t.k, "window": t.window.format() if t.window is not None else None,
            "atoms": [[[rational_to_json(x) for x in pt], scalar_to_json(w)] for pt, w in t.atoms]}


def to_json(obj) -> Any:
    if isinstance(obj, PiecewiseQP):
        return pqp_to_json(obj)
    if isinstance(obj, QuasiPolynomial):
        return {"type": "qp", **qp_to_json(obj)}
    if isinstance(obj, Poly):
        return {"type": "poly", **poly_to_json(obj)}
    if isinstance(obj, Polyhedron):
        return {"type": "polyhedron", **polyhedron_to_json(obj)}
    if isinstance(obj, Window):
        return {"type": "window", "value": window_to_json(obj)}
    if isinstance(obj, QuotientMap):
        return map_to_json(obj)
    if isinstance(obj, AsymptoticSeries):
        return series_to_json(obj)
    if isinstance(obj, ThetaSample):
        return theta_to_json(obj)
    if isinstance(obj, (Fraction, int, Cyclotomic)):
        return scalar_to_json(obj)
    raise TypeError(f"no JSON form for {type(obj).__name__}")


def dumps(obj) -> str:
    return pretty_json(to_json(obj))


def pretty_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Indented JSON with short lists of scalars kept on one line; keys sorted."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)

    def flat(x) -> bool:
        return not isinstance(x, (dict, list)) or (isinstance(x, list) and all(flat(y) for y in x))

    if isinstance(obj, list):
        if flat(obj):
            return json.dumps(obj)
        inner = ",\n".join(pad + pretty_json(x, indent, _level + 1) for x in obj)
        return "[\n" + inner + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(f"{pad}{json.dumps(k)}: {pretty_json(obj[k], indent, _level + 1)}" for k in sorted(obj))
        return "{\n" + inner + "\n" + end + "}"
    return json.dumps(obj)


# ---------------------------------------------------------------------- readers (path-tagged)


def _keys(obj, path: str, allowed: set, required: set = frozenset()):
    if not isinstance(obj, dict):
        raise _Fail(path, f"expected an object, got {type(obj).__name__}")
    for k in obj:
        if k not in allowed:
            raise _Fail(f"{path}.{k}", "unknown field")
    for k in required:
        if k not in obj:
            raise _Fail(path, f"missing field {k!r}")


def _list(obj, path: str, length: int | None = None) -> list:
    if not isinstance(obj, list):
        raise _Fail(path, f"expected a list, got {type(obj).__name__}")
    if length is not None and len(obj) != length:
        raise _Fail(path, f"expected {length} entries, got {len(obj)}")
    return obj


def _int(obj, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise _Fail(path, f"expected an integer, got {obj!r}")
    return obj


def read_rational(obj, path: str) -> Fraction:
    if isinstance(obj, bool) or not isinstance(obj, (int, str)):
        raise _Fail(path, f"malformed rational {obj!r}")
    try:
        return to_fraction(obj)
    except (ValueError, ZeroDivisionError):
        raise _Fail(path, f"malformed rational {obj!r}") from None


def read_scalar(obj, path: str):
    if isinstance(obj, dict):
        _keys(obj, path, {"level", "coeffs"}, {"level", "coeffs"})
        level = _int(obj["level"], f"{path}.level")
        if level < 1:
            raise _Fail(f"{path}.level", "level must be positive")
        coeffs = [read_rational(c, f"{path}.coeffs[{i}]") for i, c in enumerate(_list(obj["coeffs"], f"{path}.coeffs"))]
        if len(coeffs) > level:
            raise _Fail(f"{path}.coeffs", "more coefficients than the level")
        return Cyclotomic(level, coeffs)
    return read_rational(obj, path)


def _vector(obj, path: str, d: int | None = None) -> tuple:
    items = _list(obj, path, d)
    return tuple(read_rational(x, f"{path}[{i}]") for i, x in enumerate(items))


def read_poly_terms(obj, path: str, nvars: int) -> Poly:
    terms = {}
    for i, t in enumerate(_list(obj, path)):
        tp = f"{path}[{i}]"
        pair = _list(t, tp, 2)
        exps = tuple(_int(e, f"{tp}[0][{j}]") for j, e in enumerate(_list(pair[0], f"{tp}[0]", nvars)))
        if any(e < 0 for e in exps):
            raise _Fail(f"{tp}[0]", "negative exponent")
        c = read_scalar(pair[1], f"{tp}[1]")
        terms[exps] = terms[exps] + c if exps in terms else c
    return Poly(nvars, terms)


def read_poly(obj, path: str, dim: int | None = None) -> Poly:
    _keys(obj, path, {"type", "nvars", "dim", "terms"}, {"terms"})
    n = obj.get("nvars", obj.get("dim", dim))
    if n is None:
        raise _Fail(path, "missing field 'nvars'")
    n = _int(n, f"{path}.nvars")
    return read_poly_terms(obj["terms"], f"{path}.terms", n)


def read_qp(obj, path: str, dim: int) -> QuasiPolynomial:
    if not isinstance(obj, dict):
        c = read_scalar(obj, path)
        return QuasiPolynomial.const(dim, c)
    _keys(obj, path, {"type", "dim", "terms"}, {"terms"})
    if "dim" in obj and _int(obj["dim"], f"{path}.dim") != dim:
        raise _Fail(f"{path}.dim", f"expected dimension {dim}")
    terms = {}
    for i, t in enumerate(_list(obj["terms"], f"{path}.terms")):
        tp = f"{path}.terms[{i}]"
        _keys(t, tp, {"u", "g", "poly"}, {"poly"})
        u = read_rational(t.get("u", "0"), f"{tp}.u")
        g = _vector(t.get("g", ["0"] * dim), f"{tp}.g", dim)
        p = read_poly_terms(t["poly"], f"{tp}.poly", dim + 1)
        key = (u, g)
        terms[key] = terms[key] + p if key in terms else p
    try:
        return QuasiPolynomial(dim, terms)
    except ValueError as exc:
        raise _Fail(path, str(exc)) from None


def read_polyhedron(obj, path: str, dim: int | None = None) -> Polyhedron:
    if not isinstance(obj, dict):
        raise _Fail(path, "expected a polyhedron object")
    _keys(obj, path, {"type", "dim", "ineqs", "vertices", "rays", "lines", "interval", "point", "empty"})
    d = _int(obj["dim"], f"{path}.dim") if "dim" in obj else dim
    if obj.get("empty") is True:
        if d is None:
            raise _Fail(path, "empty polyhedron needs 'dim'")
        return Polyhedron.empty(d)
    try:
        if "interval" in obj:
            a, b = _vector(obj["interval"], f"{path}.interval", 2)
            return Polyhedron.interval(a, b)
        if "point" in obj:
            return Polyhedron.point(_vector(obj["point"], f"{path}.point"))
        if "ineqs" in obj:
            rows = []
            for i, r in enumerate(_list(obj["ineqs"], f"{path}.ineqs")):
                rp = f"{path}.ineqs[{i}]"
                pair = _list(r, rp, 2)
                a = _vector(pair[0], f"{rp}[0]", d)
                rows.append((a, read_rational(pair[1], f"{rp}[1]")))
                d = len(a) if d is None else d
            if d is None:
                raise _Fail(path, "dimension needed for a polyhedron without inequalities")
            return Polyhedron(rows, d)
        if "vertices" in obj:
            verts = [_vector(v, f"{path}.vertices[{i}]", d) for i, v in enumerate(_list(obj["vertices"], f"{path}.vertices"))]
            if not verts:
                raise _Fail(f"{path}.vertices", "at least one vertex is required")
            d = len(verts[0])
            rays = [_vector(v, f"{path}.rays[{i}]", d) for i, v in enumerate(_list(obj.get("rays", []), f"{path}.rays"))]
            lines = [_vector(v, f"{path}.lines[{i}]", d) for i, v in enumerate(_list(obj.get("lines", []), f"{path}.lines"))]
            return Polyhedron.from_generators(verts, rays, lines, d)
    except ValueError as exc:
        raise _Fail(path, str(exc)) from None
    raise _Fail(path, "polyhedron needs one of ineqs, vertices, interval, point")


def read_pqp(obj, path: str) -> PiecewiseQP:
    _keys(obj, path, {"type", "dim", "pieces"}, {"dim", "pieces"})
    d = _int(obj["dim"], f"{path}.dim")
    pieces = []
    for i, pc in enumerate(_list(obj["pieces"], f"{path}.pieces")):
        pp = f"{path}.pieces[{i}]"
        _keys(pc, pp, {"q", "base", "shift"}, {"base"})
        base = read_polyhedron(pc["base"], f"{pp}.base", d)
        if base.d != d:
            raise _Fail(f"{pp}.base", f"expected dimension {d}")
        q = read_qp(pc.get("q", "1"), f"{pp}.q", d)
        shift = _vector(pc.get("shift", ["0"] * d), f"{pp}.shift", d)
        pieces.append((q, ShiftedCone.of(base, shift)))
    return PiecewiseQP(d, pieces)


def read_window(obj, path: str) -> Window:
    text = obj.get("value") if isinstance(obj, dict) else obj
    if isinstance(obj, dict):
        _keys(obj, path, {"type", "value"}, {"value"})
    if not isinstance(text, str):
        raise _Fail(path, "window must be a string like \"[-1,2]x(0,1/2]\"")
    try:
        w = Window.parse(text)
    except ValueError as exc:
        raise _Fail(path, str(exc)) from None
    if any(a > b for a, b in zip(w.lo, w.hi)):
        raise _Fail(path, "window has lower end above upper end")
    return w


def read_map(obj, path: str) -> QuotientMap:
    _keys(obj, path, {"type", "matrix", "image_basis"}, {"matrix"})
    rows = [_vector(r, f"{path}.matrix[{i}]") for i, r in enumerate(_list(obj["matrix"], f"{path}.matrix"))]
    basis = None
    if "image_basis" in obj:
        basis = [_vector(r, f"{path}.image_basis[{i}]") for i, r in enumerate(_list(obj["image_basis"], f"{path}.image_basis"))]
    try:
        return QuotientMap.of(rows, basis)
    except ValueError as exc:
        raise _Fail(path, str(exc)) from None


def read_series(obj, path: str) -> AsymptoticSeries:
    _keys(obj, path, {"type", "dim", "s", "order", "terms"}, {"dim", "s", "order", "terms"})
    d = _int(obj["dim"], f"{path}.dim")
    s = _int(obj["s"], f"{path}.s")
    order = _int(obj["order"], f"{path}.order")
    by: dict = {}
    for i, t in enumerate(_list(obj["terms"], f"{path}.terms")):
        tp = f"{path}.terms[{i}]"
        _keys(t, tp, {"n", "face", "alpha", "beta", "coeff"}, {"n", "face", "alpha", "beta", "coeff"})
        n = _int(t["n"], f"{tp}.n")
        face = read_polyhedron(t["face"], f"{tp}.face", d)
        alpha = tuple(_int(a, f"{tp}.alpha[{j}]") for j, a in enumerate(_list(t["alpha"], f"{tp}.alpha", d)))
        beta = tuple(_int(a, f"{tp}.beta[{j}]") for j, a in enumerate(_list(t["beta"], f"{tp}.beta", d)))
        vals = [read_scalar(v, f"{tp}.coeff[{j}]") for j, v in enumerate(_list(t["coeff"], f"{tp}.coeff"))]
        if not vals:
            raise _Fail(f"{tp}.coeff", "empty periodic table")
        by.setdefault(s - n, {})[(face, alpha, beta)] = Periodic(vals)
    try:
        return AsymptoticSeries(d, s, order, by)
    except ValueError as exc:
        raise _Fail(path, str(exc)) from None


def read_theta(obj, path: str) -> ThetaSample:
    _keys(obj, path, {"type", "k", "window", "atoms"}, {"k", "atoms"})
    k = _int(obj["k"], f"{path}.k")
    w = read_window(obj["window"], f"{path}.window") if obj.get("window") is not None else None
    atoms = []
    for i, a in enumerate(_list(obj["atoms"], f"{path}.atoms")):
        ap = f"{path}.atoms[{i}]"
        pair = _list(a, ap, 2)
        atoms.append((_vector(pair[0], f"{ap}[0]"), read_scalar(pair[1], f"{ap}[1]")))
    return ThetaSample(k, w, atoms)


READERS: dict[str, Callable] = {
    "pqp": read_pqp, "poly": read_poly, "polyhedron": read_polyhedron, "window": read_window,
    "map": read_map, "series": read_series, "theta": read_theta,
    "qp": lambda o, p: read_qp(o, p, _int(o.get("dim"), f"{p}.dim") if isinstance(o, dict) else 0),
}


def read_typed(obj, path: str = "$"):
    if not isinstance(obj, dict) or "type" not in obj:
        raise _Fail(path, "expected an object with a 'type' field")
    kind = obj["type"]
    if kind not in READERS:
        raise _Fail(f"{path}.type", f"unknown type {kind!r}")
    return READERS[kind](obj, path)


def from_json(obj, path: str = "$"):
    """Parse a typed JSON value; raises SceneError with the failing path."""
    try:
        return read_typed(obj, path)
    except _Fail as f:
        raise SceneError([(f.path, f.message)]) from None


def loads(text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError([(f"line {exc.lineno} column {exc.colno}", exc.msg)]) from None
    return from_json(obj)


# ---------------------------------------------------------------------- scenes


COMMANDS = {
    "eval": {"m", "k", "lambda"},
    "theta": {"m", "k", "window", "out"},
    "pair": {"m", "k", "phi", "window", "N"},
    "expand": {"m", "N", "out"},
    "push": {"m", "map", "k", "window", "chambers", "reconstruct", "out"},
    "check": {"suite", "m", "k_max", "N"},
    "oracle": {"kind", "m", "k", "phi", "window", "N", "ks", "rays", "g", "z", "gset"},
}
REF_FIELDS = {"m": "pqp", "phi": "poly", "window": "window", "map": "map"}


@dataclass
class Job:
    command: str
    params: dict
    path: str
    raw: dict = field(default_factory=dict)

    def describe(self) -> str:
        args = " ".join(f"{k}={json.dumps(v) if not isinstance(v, str) else v}" for k, v in sorted(self.raw.items())
                        if k != "command")
        return f"{self.command} {args}".strip()


@dataclass
class Scene:
    dim: int | None
    definitions: dict[str, Any] = field(default_factory=dict)
    jobs: list[Job] = field(default_factory=list)

    def default(self, kind: str):
        matches = [v for v in self.definitions.values() if _kind_of(v) == kind]
        return matches[0] if len(matches) == 1 else None


def _kind_of(v) -> str:
    return {PiecewiseQP: "pqp", Poly: "poly", Window: "window", QuotientMap: "map", Polyhedron: "polyhedron",
            AsymptoticSeries: "series", ThetaSample: "theta"}.get(type(v), "other")


def _resolve(scene: Scene, name: str, value, path: str):
    """A job parameter: reference by name, inline object, or window string."""
    want = REF_FIELDS.get(name)
    if want is None:
        return value
    if isinstance(value, str) and value in scene.definitions:
        got = scene.definitions[value]
        if _kind_of(got) != want:
            raise _Fail(path, f"{value!r} is a {_kind_of(got)}, expected a {want}")
        return got
    if want == "window" and isinstance(value, str):
        return read_window(value, path)
    if isinstance(value, dict):
        obj = dict(value)
        obj.setdefault("type", want)
        return read_typed(obj, path)
    raise _Fail(path, f"unresolved reference {value!r}")


def _read_job(scene: Scene, obj, path: str) -> Job:
    if not isinstance(obj, dict):
        raise _Fail(path, "job must be an object")
    cmd = obj.get("command")
    if cmd not in COMMANDS:
        raise _Fail(f"{path}.command", f"unknown command {cmd!r}")
    params = {}
    for key, value in obj.items():
        if key == "command":
            continue
        if key not in COMMANDS[cmd]:
            raise _Fail(f"{path}.{key}", "unknown field")
        params[key] = _resolve(scene, key, value, f"{path}.{key}")
    if cmd == "push" and "chambers" in params:
        params["chambers"] = [
            scene.definitions[c] if isinstance(c, str) and c in scene.definitions
            else read_polyhedron(c, f"{path}.chambers[{i}]")
            for i, c in enumerate(_list(params["chambers"], f"{path}.chambers"))]
    for key in ("k", "N", "k_max"):
        if key in params and not isinstance(params[key], list):
            _int(params[key], f"{path}.{key}")
    if "k" in params and isinstance(params["k"], list):
        for i, x in enumerate(params["k"]):
            _int(x, f"{path}.k[{i}]")
    return Job(cmd, params, path, dict(obj))


def parse_scene(text: str) -> Scene:
    """Validated scene; all problems are collected and raised together as SceneError."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError([(f"line {exc.lineno} column {exc.colno}", exc.msg)]) from None
    errors: list[tuple[str, str]] = []
    if not isinstance(obj, dict):
        raise SceneError([("$", "scene must be a JSON object")])
    for key in obj:
        if key not in {"dim", "definitions", "jobs"}:
            errors.append((f"$.{key}", "unknown field"))
    dim = obj.get("dim")
    if dim is not None and (isinstance(dim, bool) or not isinstance(dim, int) or dim < 0):
        errors.append(("$.dim", "dim must be a non-negative integer"))
        dim = None
    scene = Scene(dim)
    defs = obj.get("definitions", {})
    if not isinstance(defs, dict):
        errors.append(("$.definitions", "expected an object"))
        defs = {}
    for name, d in defs.items():
        path = f"$.definitions.{name}"
        try:
            if isinstance(d, dict) and d.get("type") == "window" or isinstance(d, str):
                scene.definitions[name] = read_window(d, path)
            else:
                scene.definitions[name] = read_typed(d, path)
            got = scene.definitions[name]
            gd = getattr(got, "dim", None)
            if dim is not None and isinstance(got, PiecewiseQP) and gd != dim:
                errors.append((path, f"dimension {gd} differs from the scene dimension {dim}"))
        except _Fail as f:
            errors.append((f.path, f.message))
        except (ValueError, TypeError, KeyError) as exc:
            errors.append((path, f"invalid definition: {exc}"))
    jobs = obj.get("jobs", [])
    if not isinstance(jobs, list):
        errors.append(("$.jobs", "expected a list"))
        jobs = []
    for i, j in enumerate(jobs):
        try:
            scene.jobs.append(_read_job(scene, j, f"$.jobs[{i}]"))
        except _Fail as f:
            errors.append((f.path, f.message))
        except (ValueError, TypeError, KeyError) as exc:
            errors.append((f"$.jobs[{i}]", f"invalid job: {exc}"))
    if errors:
        raise SceneError(errors)
    return scene


def read_job(scene: Scene, obj, path: str = "$") -> Job:
    try:
        return _read_job(scene, obj, path)
    except _Fail as f:
        raise SceneError([(f.path, f.message)]) from None


__all__ = [
    "SceneError", "to_json", "dumps", "from_json", "loads", "parse_scene", "read_job", "Scene", "Job",
    "COMMANDS", "read_rational", "series_to_json", "pqp_to_json", "theta_to_json", "pretty_json",
]
