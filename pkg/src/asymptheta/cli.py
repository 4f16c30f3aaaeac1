"""Command-line front end.

    asymptheta run SCENE [--jobs N]
    asymptheta {eval,theta,pair,expand,push,check,oracle} [SCENE] [flags]

Exit codes: 0 success, 1 domain or input errors, 2 verification failures.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .distributions import Window, theta_pair_poly, theta_sample
from .expansion import expand
from .piecewise import PiecewiseQP, check_local_agreement
from .pushforward import ReconstructionError, push_reconstruct, push_theta
from .scalars import Poly, scalar_to_json, to_fraction
from .serialization import (COMMANDS, Job, Scene, SceneError, dumps, from_json, parse_scene, pqp_to_json,
                            pretty_json, read_job, series_to_json)

EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2


class VerificationFailure(Exception):
    pass


@dataclass
class Result:
    code: int
    text: str
    files: dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------------------- job runners


def _need(job: Job, scene: Scene, key: str, kind: str):
    if key in job.params:
        return job.params[key]
    dflt = scene.default(kind)
    if dflt is None:
        raise ValueError(f"job needs {key!r} (no unique default {kind} in the scene)")
    return dflt


def _ks(value) -> list[int]:
    return list(value) if isinstance(value, list) else [value]


def _emit(job: Job, name: str, text: str, res: Result):
    if "out" in job.params:
        res.files[str(job.params["out"])] = text
    else:
        res.text += text if text.endswith("\n") else text + "\n"


def _job_eval(scene, job, res):
    m = _need(job, scene, "m", "pqp")
    lam = [int(to_fraction(x)) for x in job.params.get("lambda", [])]
    res.text += json.dumps({"k": job.params["k"], "lambda": lam,
                            "value": scalar_to_json(m.evaluate(job.params["k"], lam))}) + "\n"


def _job_theta(scene, job, res):
    m = _need(job, scene, "m", "pqp")
    window = _need(job, scene, "window", "window")
    chunks = []
    for k in _ks(job.params.get("k", 1)):
        sample = theta_sample(m, k, window)
        chunks.append(f"# k={k} atoms={len(sample.atoms)}\n" + sample.to_csv())
    _emit(job, "theta", "".join(chunks), res)


def _job_pair(scene, job, res):
    m = _need(job, scene, "m", "pqp")
    phi = _need(job, scene, "phi", "poly")
    window = job.params.get("window")
    rows = []
    series = expand(m, job.params["N"]) if "N" in job.params else None
    bad = False
    for k in _ks(job.params.get("k", 1)):
        v = theta_pair_poly(m, k, phi, window)
        row = {"k": k, "theta": scalar_to_json(v)}
        if series is not None:
            s = series.pair(k, phi, window)
            row["series"] = scalar_to_json(s)
            row["agree"] = s == v
            bad = bad or s != v
        rows.append(row)
    res.text += pretty_json(rows) + "\n"
    if bad and window is None:
        raise VerificationFailure("series pairing differs from the exact pairing")


def _job_expand(scene, job, res):
    m = _need(job, scene, "m", "pqp")
    series = expand(m, job.params.get("N", 3))
    doc = series_to_json(series)
    doc["pretty"] = series.format().split("\n")
    _emit(job, "expand", pretty_json(doc) + "\n", res)


def _job_push(scene, job, res):
    m = _need(job, scene, "m", "pqp")
    pi = _need(job, scene, "map", "map")
    chambers = job.params.get("chambers")
    if job.params.get("reconstruct", True):
        pushed = push_reconstruct(m, pi, chambers)
        doc = pqp_to_json(pushed)
        doc["pretty"] = [f"({q.format()}) * [C({c.base!r}, shift {[str(x) for x in c.shift]})]" for q, c in pushed.pieces]
        _emit(job, "push", pretty_json(doc) + "\n", res)
    if "k" in job.params and "window" in job.params:
        for k in _ks(job.params["k"]):
            sample = push_theta(m, pi, k, job.params["window"])
            res.text += f"# pushed k={k} atoms={len(sample.atoms)}\n" + sample.to_csv()


def _monomials(d: int, deg: int) -> list[Poly]:
    out = []
    for e in itertools.product(range(deg + 1), repeat=d):
        if sum(e) <= deg:
            out.append(Poly.monomial(e))
    return out


def _check_targets(scene, job) -> list[tuple[str, PiecewiseQP]]:
    if "m" in job.params:
        return [(str(job.raw.get("m", "m")), job.params["m"])]
    return [(n, v) for n, v in scene.definitions.items() if isinstance(v, PiecewiseQP)]


def _job_check(scene, job, res):
    suite = job.params.get("suite", "exactness")
    k_max = job.params.get("k_max", 8)
    failures, cases = [], 0
    for name, m in _check_targets(scene, job):
        if suite == "exactness":
            if not m.is_bounded():
                continue
            n = job.params.get("N", 4)
            series = expand(m, n, warn=False)
            for k in range(1, k_max + 1):
                for phi in _monomials(m.dim, 2):
                    cases += 1
                    a, b = series.pair(k, phi), theta_pair_poly(m, k, phi)
                    if a != b:
                        failures.append({"m": name, "k": k, "phi": sorted(map(list, phi.terms))})
        elif suite == "oracle":
            from .oracle import oracle_theta_pair

            lo, hi = [Fraction(-2)] * m.dim, [Fraction(2)] * m.dim
            w = Window.closed(lo, hi)
            for k in range(1, k_max + 1):
                for phi in _monomials(m.dim, 2):
                    cases += 1
                    if oracle_theta_pair(m, k, phi, lo, hi) != theta_pair_poly(m, k, phi, w):
                        failures.append({"m": name, "k": k})
        elif suite == "local":
            verts = {tuple(v) for _, c in m.pieces for v in c.base.vertices}
            for v in sorted(verts):
                cases += 1
                ok, win, bad = check_local_agreement(m, v)
                if not ok:
                    failures.append({"m": name, "vertex": [str(x) for x in v], "at": str(bad)})
        elif suite == "roundtrip":
            cases += 1
            text = dumps(m)
            if dumps(from_json(json.loads(text))) != text:
                failures.append({"m": name})
        else:
            raise ValueError(f"unknown check suite {suite!r}")
    res.text += pretty_json({"suite": suite, "cases": cases, "failures": failures}) + "\n"
    if failures:
        raise VerificationFailure(f"{len(failures)} failing case(s) in suite {suite}")


def _job_oracle(scene, job, res):
    from . import oracle

    kind = job.params.get("kind", "pair")
    if kind == "pair":
        m = _need(job, scene, "m", "pqp")
        phi = _need(job, scene, "phi", "poly")
        w = _need(job, scene, "window", "window")
        out = []
        for k in _ks(job.params.get("k", 1)):
            a = oracle.oracle_theta_pair(m, k, phi, w.lo, w.hi, w.lo_closed, w.hi_closed)
            b = theta_pair_poly(m, k, phi, w)
            out.append({"k": k, "oracle": scalar_to_json(a), "library": scalar_to_json(b), "agree": a == b})
        res.text += pretty_json(out) + "\n"
        if not all(r["agree"] for r in out):
            raise VerificationFailure("oracle pairing disagrees with the library")
    elif kind == "remainder":
        import mpmath

        m = _need(job, scene, "m", "pqp")
        phi = job.params.get("phi", "gaussian")
        if phi == "gaussian":
            phi = lambda *x: mpmath.exp(-sum(t * t for t in x))  # noqa: E731
        rep = oracle.remainder_table(m, phi, job.params.get("N", 3), job.params.get("ks", [10, 20, 40, 80]))
        res.text += rep.to_json() + "\n" + rep.format_table() + "\n"
        if rep.verdict != "bounded":
            raise VerificationFailure("scaled remainder is not bounded")
    elif kind == "genfunc":
        zs = [complex(z) for z in job.params.get("z", ["1-0.5j"])]
        rays = job.params.get("rays", [[1]])
        g = job.params.get("g", ["0"] * len(rays))
        out = []
        for z in zs:
            chk = oracle.genfunc_crosscheck(rays, g, [z] * len(rays), job.params.get("k", 100), job.params.get("N", 6))
            out.append({"z": str(z), "closed": str(chk.closed), "laurent": str(chk.laurent),
                        "difference": chk.difference})
        res.text += pretty_json(out) + "\n"
    elif kind == "unicity":
        m = _need(job, scene, "m", "pqp")
        r = oracle.unicity_probe(m, job.params.get("gset"), job.params.get("N", 2))
        res.text += json.dumps({"witness": None if r.witness is None else [str(x) for x in r.witness],
                                "tried": len(r.tried), "exhausted": r.exhausted}) + "\n"
    else:
        raise ValueError(f"unknown oracle kind {kind!r}")


RUNNERS = {"eval": _job_eval, "theta": _job_theta, "pair": _job_pair, "expand": _job_expand,
           "push": _job_push, "check": _job_check, "oracle": _job_oracle}


def run_job(scene: Scene, job: Job) -> Result:
    res = Result(EXIT_OK, "")
    try:
        RUNNERS[job.command](scene, job, res)
    except (VerificationFailure, ReconstructionError) as exc:
        res.code = EXIT_VERIFY
        res.text += f"verification failed: {exc}\n"
    except (ValueError, ArithmeticError, TypeError, KeyError) as exc:
        res.code = EXIT_DOMAIN
        res.text += f"error: {exc}\n"
    return res


def _run_indexed(args: tuple[str, int, dict | None]) -> Result:
    text, idx, override = args
    scene = parse_scene(text)
    job = scene.jobs[idx] if override is None else read_job(scene, override)
    return run_job(scene, job)


def run(scene: Scene, jobs: Sequence[Job] | None = None, parallel: int = 1, scene_text: str | None = None) -> tuple[int, list[Result]]:
    """Run jobs (default: all scene jobs); the exit code is the worst job code."""
    jobs = list(scene.jobs if jobs is None else jobs)
    if parallel > 1 and scene_text is not None and jobs and all(j in scene.jobs for j in jobs):
        idx = [scene.jobs.index(j) for j in jobs]
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_run_indexed, [(scene_text, i, None) for i in idx]))
    else:
        results = [run_job(scene, j) for j in jobs]
    code = max((r.code for r in results), default=EXIT_OK)
    return code, results


# ---------------------------------------------------------------------- argument parsing


def _int_list(text: str) -> list[int] | int:
    vals = [int(x) for x in text.split(",") if x.strip()]
    return vals[0] if len(vals) == 1 else vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asymptheta", description="Exact asymptotics of piecewise quasi-polynomial families.")
    p.add_argument("command", choices=["run"] + sorted(COMMANDS))
    p.add_argument("scene", nargs="?", help="JSON scene file ('-' for stdin)")
    p.add_argument("--m", help="name of the piecewise quasi-polynomial")
    p.add_argument("--k", type=_int_list, help="level k, or a comma-separated list")
    p.add_argument("--lambda", dest="lam", help="lattice point, comma-separated")
    p.add_argument("--window", help='window like "[-1,2]x[-1,2]" or a defined name')
    p.add_argument("--phi", help="name of a polynomial test function")
    p.add_argument("--N", type=int, help="truncation order")
    p.add_argument("--map", help="name of the quotient map")
    p.add_argument("--chambers", help="JSON list of chamber polyhedra")
    p.add_argument("--no-reconstruct", action="store_true", help="push: only project theta samples")
    p.add_argument("--suite", choices=["exactness", "oracle", "local", "roundtrip"])
    p.add_argument("--k-max", type=int)
    p.add_argument("--kind", choices=["pair", "remainder", "genfunc", "unicity"])
    p.add_argument("--ks", type=_int_list, help="oracle remainder: list of k")
    p.add_argument("--rays", help="oracle genfunc: JSON list of cone generators")
    p.add_argument("--g", help="oracle genfunc: comma-separated character")
    p.add_argument("--z", help="oracle genfunc: comma-separated complex samples")
    p.add_argument("--out", help="write the main output of a single job to this file")
    p.add_argument("--jobs", type=int, default=1, help="run scene jobs in this many processes")
    return p


def _job_from_args(args) -> dict | None:
    obj: dict = {"command": args.command}
    if args.m:
        obj["m"] = args.m
    if args.k is not None:
        obj["k"] = args.k
    if args.lam is not None:
        obj["lambda"] = [x.strip() for x in args.lam.split(",") if x.strip()]
    if args.window:
        obj["window"] = args.window
    if args.phi:
        obj["phi"] = args.phi
    if args.N is not None:
        obj["N"] = args.N
    if args.map:
        obj["map"] = args.map
    if args.chambers:
        obj["chambers"] = json.loads(args.chambers)
    if args.no_reconstruct:
        obj["reconstruct"] = False
    if args.suite:
        obj["suite"] = args.suite
    if args.k_max is not None:
        obj["k_max"] = args.k_max
    if args.kind:
        obj["kind"] = args.kind
    if args.ks is not None:
        obj["ks"] = args.ks if isinstance(args.ks, list) else [args.ks]
    if args.rays:
        obj["rays"] = json.loads(args.rays)
    if args.g:
        obj["g"] = [x.strip() for x in args.g.split(",")]
    if args.z:
        obj["z"] = [x.strip() for x in args.z.split(",")]
    if args.out:
        obj["out"] = args.out
    return obj if len(obj) > 1 else None


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    text = "{}"
    if args.scene:
        try:
            text = sys.stdin.read() if args.scene == "-" else Path(args.scene).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read scene: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
    try:
        scene = parse_scene(text)
        override = _job_from_args(args) if args.command != "run" else None
        if args.command == "run":
            jobs = scene.jobs
        elif override is not None:
            jobs = [read_job(scene, override, "$.cli")]
        else:
            jobs = [j for j in scene.jobs if j.command == args.command] or [read_job(scene, {"command": args.command}, "$.cli")]
    except SceneError as exc:
        for path, msg in exc.errors:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_DOMAIN
    code, results = run(scene, jobs, parallel=args.jobs, scene_text=text)
    for job, r in zip(jobs, results):
        if len(jobs) > 1:
            print(f"## {job.describe()}")
        sys.stdout.write(r.text)
        for path, content in r.files.items():
            Path(path).write_text(content, encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
