"""Batch front-end: ``schlafli run --scene FILE`` and ``schlafli list-catalog``.

Scene files are JSON (``"schema": 1``) with a default ``space``, a list of
``objects`` and a list of ``tasks``; see README.md for the format.  Exit
status: 0 when every row passes, 1 when some row fails, 2 on scene errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from . import battery as B
from . import functionals as F
from . import integral_geom as IG
from . import polyhedra as P
from . import surfaces as S
from .exprlang import ExprError
from .report import Row, at_least, at_most, check, series_csv, to_csv, to_json
from .spaceform import GeometryError, SpaceForm

SCHEMA = 1
STOCHASTIC = {"steiner", "crofton"}
DEFAULT_TOL = {
    "verify-schlafli": 1e-5,
    "volume": 1e-8,
    "steiner": 4.0,     # Monte Carlo tasks: tolerance counts standard errors
    "crofton": 4.0,
    "alexandrov": 1e-8,
    "foliation": 1e-5,
    "flex": 1e-6,
    "warped": 1e-10,
    "full-battery": 0.0,
}
TASK_TYPES = tuple(DEFAULT_TOL)


class SceneError(Exception):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


# -- scene model --------------------------------------------------------------------------------------

_MODELS = {"euclidean": 0.0, "sphere": 1.0, "hyperbolic": -1.0, "desitter": 1.0}


def _space(spec, where) -> SpaceForm:
    if spec is None:
        return SpaceForm.euclidean()
    if not isinstance(spec, dict) or spec.get("model") not in _MODELS:
        raise SceneError(where, f"space needs a model among {sorted(_MODELS)}")
    K = float(spec.get("K", _MODELS[spec["model"]]))
    if spec["model"] == "desitter":
        return SpaceForm.de_sitter(3, K)
    if (K == 0) != (spec["model"] == "euclidean") or (K > 0) != (spec["model"] == "sphere"):
        raise SceneError(where, f"curvature {K} does not match model {spec['model']!r}")
    return SpaceForm(3, K)


def _catalog_call(table, name, params, where):
    if name not in table:
        raise SceneError(where, f"unknown catalog entry {name!r}")
    entry = table[name]
    unknown = set(params) - set(entry["params"])
    if unknown:
        raise SceneError(where, f"unknown parameters {sorted(unknown)} for {name!r}")
    try:
        return entry["factory"](**params)
    except ExprError as exc:
        raise SceneError(where, f"expression error at line {exc.line}, col {exc.col}: {exc}") from exc
    except (GeometryError, ValueError, TypeError) as exc:
        raise SceneError(where, str(exc)) from exc


def _surface(obj, space, where):
    params = dict(obj.get("params", {}))
    name = obj.get("catalog")
    if name is None:
        raise SceneError(where, "surface objects need a 'catalog' entry")
    if "K" in S.CATALOG.get(name, {}).get("params", {}):
        params.setdefault("K", space.K)
    return _catalog_call(S.CATALOG, name, params, where)


FOLIATIONS = {"ball": {"params": {"R": "ball radius (leaves are concentric spheres)"}}}


def _build_object(obj, default_space, where):
    kind = obj.get("kind")
    space = _space(obj["space"], where + ".space") if "space" in obj else default_space
    if kind == "surface":
        return _surface(obj, space, where)
    if kind == "family":
        surf = _surface(obj, space, where)
        tr = obj.get("t_range", [-0.5, 0.5])
        return S.SurfaceFamily(surf, (float(tr[0]), float(tr[1])))
    if kind == "polyhedron":
        if "vertices" in obj:
            try:
                return P.Polyhedron(space, obj["vertices"], [tuple(f) for f in obj["facets"]])
            except (GeometryError, ValueError, KeyError) as exc:
                raise SceneError(where, str(exc)) from exc
        params = dict(obj.get("params", {}))
        if obj.get("catalog") == "model-simplex":
            params.setdefault("K", space.K)
        return _catalog_call(P.CATALOG, obj.get("catalog"), params, where)
    if kind == "polypath":
        if "seed" not in obj:
            raise SceneError(where, "random polyhedral paths need an explicit seed")
        import numpy as np
        rng = np.random.default_rng(int(obj["seed"]))
        return B._random_tet_path(space, rng, float(obj.get("speed", 0.3)))
    if kind == "foliation":
        R = float(obj.get("params", {}).get("R", 1.0))
        return F.FoliationSpec(S.ball_foliation(space, R))
    if kind == "warped":
        try:
            return F.WarpedProductSpec(float(obj["k"]), float(obj["k_prime"]), obj["f"],
                                       tuple(obj["interval"]), int(obj.get("grid", 201)))
        except KeyError as exc:
            raise SceneError(where, f"missing field {exc}") from exc
    raise SceneError(where + ".kind", f"unknown object kind {kind!r}")


@dataclass
class Scene:
    space: SpaceForm
    objects: dict
    tasks: list = field(default_factory=list)
    name: str = "scene"


def load_scene(path: Path, seed_override: int | None = None) -> Scene:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise SceneError("$", "scene must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise SceneError("$.schema", f"expected schema {SCHEMA}")
    space = _space(doc.get("space"), "$.space")
    objects = {}
    for i, obj in enumerate(doc.get("objects", [])):
        where = f"$.objects[{i}]"
        oid = obj.get("id")
        if not isinstance(oid, str):
            raise SceneError(where + ".id", "objects need a string id")
        if oid in objects:
            raise SceneError(where + ".id", f"duplicate id {oid!r}")
        objects[oid] = (obj.get("kind"), _build_object(obj, space, where))
    tasks, seen = [], set()
    for i, task in enumerate(doc.get("tasks", [])):
        where = f"$.tasks[{i}]"
        tid = task.get("id")
        if not isinstance(tid, str) or tid in seen:
            raise SceneError(where + ".id", "tasks need unique string ids")
        seen.add(tid)
        ttype = task.get("type")
        if ttype not in TASK_TYPES:
            raise SceneError(where + ".type", f"unknown task type {ttype!r}")
        if ttype != "full-battery" and task.get("object") not in objects:
            raise SceneError(where + ".object", f"unknown object id {task.get('object')!r}")
        needs_seed = ttype in STOCHASTIC or ttype == "full-battery" or \
            (ttype == "volume" and "oracle" not in task)
        if needs_seed and "seed" not in task:
            raise SceneError(where + ".seed", f"task type {ttype!r} needs an explicit seed")
        task = dict(task)
        if seed_override is not None and "seed" in task:
            task["seed"] = int(seed_override)
        task.setdefault("tolerance", DEFAULT_TOL[ttype])
        tasks.append(task)
    return Scene(space, objects, tasks, Path(path).name)


# -- tasks --------------------------------------------------------------------------------------------

def _task_verify(task, kind, obj):
    tol = float(task["tolerance"])
    t, h = float(task.get("t", 0.5 if kind == "polypath" else 0.0)), float(task.get("h", 1e-4))
    if kind == "family":
        r = S.schlafli_residual_smooth(obj, t, h)
        return [check(task["object"], "smooth Schlafli residual", r.lhs, r.rhs, tol, r.error_budget)]
    if kind == "polypath":
        r = P.schlafli_residual_poly(obj, t, h)
        return [check(task["object"], "polyhedral Schlafli residual", r.lhs, r.rhs, tol, r.error_budget,
                      relative_to=r.rhs)]
    raise SceneError(task["id"], "verify-schlafli needs a family or polypath object")


def _task_volume(task, kind, obj):
    tol = float(task["tolerance"])
    seed = task.get("seed")
    if kind == "surface":
        v, err = S.enclosed_volume(obj)
        if "oracle" in task:
            return [check(task["object"], "enclosed volume", v, float(task["oracle"]), tol, err)]
        mc, se = S.enclosed_volume(obj, "mc", int(task.get("samples", 200_000)), int(seed))
        return [check(task["object"], "enclosed volume (quadrature vs Monte Carlo)", v, mc, 0.0, tol * se, seed)]
    if kind == "polyhedron":
        v, err = P.poly_volume(obj)
        if "oracle" in task:
            return [check(task["object"], "volume", v, float(task["oracle"]), tol, err)]
        mc, se = P.poly_volume(obj, "mc", int(task.get("samples", 200_000)), int(seed))
        return [check(task["object"], "volume (quadrature vs Monte Carlo)", v, mc, 0.0, tol * se, seed)]
    raise SceneError(task["id"], "volume needs a surface or polyhedron object")


def _task_steiner(task, kind, obj):
    body = IG.convex_body(obj)
    st = IG.steiner_from_curvature(body)
    seed, k = int(task["seed"]), float(task["tolerance"])
    rows, series = [], []
    for j, eps in enumerate(task.get("eps", [0.1, 0.3, 0.5])):
        v, e = IG.eps_volume_direct(body, float(eps), int(task.get("samples", 200_000)), seed + j)
        rows.append(check(task["object"], f"V_eps at eps={float(eps):g}", v, st(eps), 0.0, k * e, seed + j))
        series.append((float(eps), float(st(eps)), v, e))
    return rows, {"steiner": (("eps", "polynomial", "monte_carlo", "std_error"), series)}


def _task_crofton(task, kind, obj):
    body = IG.convex_body(obj)
    seed, k, n = int(task["seed"]), float(task["tolerance"]), int(task.get("samples", 200_000))
    p1, e1 = IG.crofton_lines_mc(body, n, seed)
    p2, e2 = IG.crofton_planes_mc(body, n, seed + 1)
    return [check(task["object"], "P1 lines vs (pi/2) A", p1, 0.5 * math.pi * body.A, 0.0, k * e1, seed),
            check(task["object"], "P2 planes vs M/2", p2, 0.5 * body.M, 0.0, k * e2, seed + 1)]


def _task_alexandrov(task, kind, obj):
    rep = F.alexandrov_compare(obj)
    return ([at_least(task["object"], "P2(sphere) - P2(S)", rep.difference, 0.0, float(task["tolerance"])),
             Row("", task["object"], "equality flag", float(rep.equality), float("nan"), 0.0, 0.0)],
            {"alexandrov": (("area", "radius", "p2_gap", "max_umbilic_gap"),
                            [(rep.area, rep.radius, rep.difference, rep.max_umbilic_gap)])})


def _task_foliation(task, kind, obj):
    rep = F.foliation_identities(obj)
    tol = float(task["tolerance"])
    return [check(task["object"], label, getattr(rep, k).lhs, getattr(rep, k).rhs, tol,
                  getattr(rep, k).error_budget) for k, label in B.FOLIATION_LABELS.items()]


def _task_flex(task, kind, obj):
    steps = int(task.get("steps", 50))
    states = P.flex_continuation(obj, steps, float(task.get("step_size", 1e-2))).states
    L0 = obj.edge_lengths()
    drift = max(float(abs(s.edge_lengths() - L0).max()) for s in states)
    T = [P.total_mean_curvature_poly(s) for s in states]
    var = max(abs(x - T[0]) for x in T) / abs(T[0])
    series = [(k, T[k], states[k].signed_volume_flat()) for k in range(len(states))]
    return ([at_most(task["object"], "max edge-length drift", drift, float(task.get("drift_tolerance", 1e-9))),
             at_most(task["object"], "relative variation of total mean curvature", var, float(task["tolerance"]))],
            {"flex": (("step", "total_mean_curvature", "generalised_volume"), series)})


def _task_warped(task, kind, obj):
    r1, r2 = F.warped_einstein_check(obj)
    tol = float(task["tolerance"])
    return [check(task["object"], "max |f'' + k' f|", r1, 0.0, tol),
            check(task["object"], "max |k - k' f^2 - f'^2|", r2, 0.0, tol)]


def _task_battery(task, kind, obj, threads=1):
    crit = [int(c) for c in task.get("criteria", sorted(B.CRITERIA))]
    base = int(task["seed"])
    overrides = task.get("overrides", {})

    def one(n):
        kw = dict(overrides.get(str(n), {}))
        if "seed" in B.CRITERIA[n].__code__.co_varnames:
            kw.setdefault("seed", base * 1000 + n)
        rows, series = B.run_criterion(n, **kw)
        return rows, {f"c{n:02d}_{k}": v for k, v in series.items()}

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(one, crit))
    else:
        parts = [one(n) for n in crit]
    rows, series = [], {}
    for r, s in parts:
        rows += r
        series.update(s)
    return rows, series


HANDLERS = {
    "verify-schlafli": _task_verify,
    "volume": _task_volume,
    "steiner": _task_steiner,
    "crofton": _task_crofton,
    "alexandrov": _task_alexandrov,
    "foliation": _task_foliation,
    "flex": _task_flex,
    "warped": _task_warped,
}


def run_task(scene: Scene, task: dict, threads: int = 1):
    kind, obj = scene.objects.get(task.get("object"), (None, None))
    t0 = time.perf_counter()
    try:
        if task["type"] == "full-battery":
            out = _task_battery(task, kind, obj, threads)
        else:
            out = HANDLERS[task["type"]](task, kind, obj)
    except (GeometryError, ValueError, ArithmeticError) as exc:
        out = [Row("", str(task.get("object")), f"error: {type(exc).__name__}: {exc}",
                   float("nan"), float("nan"), float("nan"), float(task["tolerance"]))]
    rows, series = out if isinstance(out, tuple) else (out, {})
    rows = [r.with_task(task["id"]) for r in rows]
    return rows, series, time.perf_counter() - t0


def run_scene(scene: Scene, threads: int = 1):
    tasks = sorted(scene.tasks, key=lambda t: t["id"])
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda t: run_task(scene, t, 1), tasks))
    else:
        results = [run_task(scene, t, threads) for t in tasks]
    rows, series, timings = [], {}, {}
    for task, (r, s, dt) in zip(tasks, results):
        rows += r
        for name, data in s.items():
            series[f"{task['id']}_{name}"] = data
        timings[task["id"]] = dt
    return rows, series, timings


# -- entry points -------------------------------------------------------------------------------------

def _resolve_scene(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    bundled = resources.files("schlafli") / "scenes" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise SceneError(arg, "scene file not found")


def cmd_run(args) -> int:
    try:
        scene = load_scene(_resolve_scene(args.scene), args.seed_override)
    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return 2
    rows, series, timings = run_scene(scene, max(1, args.threads))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"scene": scene.name, "version": __version__}
    (out / "report.json").write_text(to_json(rows, meta))
    (out / "report.csv").write_text(to_csv(rows))
    (out / "timings.json").write_text(json.dumps({k: round(v, 3) for k, v in timings.items()}, indent=2) + "\n")
    if args.plot_data:
        for name, (cols, data) in sorted(series.items()):
            (out / f"plot_{name}.csv").write_text(series_csv(cols, data))
    failed = [r for r in rows if not r.passed]
    if args.json:
        print(to_json(rows, meta), end="")
    else:
        print(f"{len(rows)} rows, {len(failed)} failed; reports in {out}")
        for r in failed:
            print(f"FAIL {r.task} {r.object} {r.quantity}: residual {r.residual:.3g} "
                  f"(tolerance {r.tolerance:.3g} + budget {r.error_budget:.3g})")
    return 1 if failed else 0


def catalog() -> dict:
    return {
        "surfaces": {k: v["params"] for k, v in S.CATALOG.items()},
        "polyhedra": {k: v["params"] for k, v in P.CATALOG.items()},
        "foliations": {k: v["params"] for k, v in FOLIATIONS.items()},
        "warped": {k: {"k": s.k, "k_prime": s.k_prime, "f": s.f, "interval": list(s.interval)}
                   for k, s in F.WARPED_CATALOG.items()},
        "tasks": {k: {"default_tolerance": v, "needs_seed": k in STOCHASTIC or k == "full-battery"}
                  for k, v in DEFAULT_TOL.items()},
    }


def cmd_list(args) -> int:
    cat = catalog()
    if args.json:
        print(json.dumps(cat, indent=2, sort_keys=True))
        return 0
    for section, entries in cat.items():
        print(f"{section}:")
        for name, params in entries.items():
            desc = ", ".join(f"{k}={v}" for k, v in params.items()) if params else "(no parameters)"
            print(f"  {name}: {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schlafli", description="Space-form geometry verification batches.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scene file")
    run.add_argument("--scene", required=True, help="scene JSON (or the name of a bundled scene)")
    run.add_argument("--out", default="schlafli-out", help="output directory")
    run.add_argument("--plot-data", action="store_true", help="write per-task CSV series")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--seed-override", type=int, default=None)
    run.add_argument("--json", action="store_true", help="also print the JSON report")
    run.set_defaults(func=cmd_run)
    lc = sub.add_parser("list-catalog", help="list catalog objects and parameters")
    lc.add_argument("--json", action="store_true")
    lc.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
