"""The acceptance battery: one function per criterion, each returning report rows.

Every function takes a seed and keyword overrides, so the command line
front-end and the test-suite run exactly the same checks.
"""

from __future__ import annotations

import math

import numpy as np

from . import functionals as F
from . import integral_geom as IG
from . import polyhedra as P
from . import surfaces as S
from .exprlang import ExprError, eval_jet, evaluate, parse
from .exprlang.generate import random_program, random_text
from .report import Row, at_least, at_most, check
from .spaceform import SpaceForm, ball_volume_closed

SPACES = {
    "E3": SpaceForm.euclidean(3),
    "S3": SpaceForm.sphere(3),
    "H3": SpaceForm.hyperbolic(3),
}


def _rng(seed, *salt):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *salt]))


# 1 ---------------------------------------------------------------------------------------------

def _random_tet_path(space, rng, speed=0.3):
    tet = P.random_tetrahedron(space, rng)
    vel = speed * rng.standard_normal((4, space.ambient_dim))
    return P.PolyPath.from_velocities(tet, vel)


def c01_polyhedral(seed=1, paths=20, h=1e-4, tol=1e-3, spaces=("E3", "S3", "H3")):
    rows = []
    for name in spaces:
        sp = SPACES[name]
        rng = _rng(seed, 1, ord(name[0]))
        for i in range(paths):
            path = _random_tet_path(sp, rng)
            r = P.schlafli_residual_poly(path, 0.5, h=h)
            rows.append(check(f"c01/{name}/path{i:02d}", "mK V' - sum W theta'", r.lhs, r.rhs, tol,
                              r.error_budget, seed, relative_to=r.rhs))
    return rows


# 2 ---------------------------------------------------------------------------------------------

def c02_euclidean(seed=2, paths=50, h=1e-4, tol=1e-6):
    sp = SPACES["E3"]
    rng = _rng(seed, 2)
    rows = []
    for i in range(paths):
        r = P.schlafli_residual_poly(_random_tet_path(sp, rng), 0.5, h=h, richardson=True)
        rows.append(check(f"c02/E3/path{i:02d}", "sum W theta'", r.rhs, 0.0, tol, 0.0, seed))
    return rows


# 3 ---------------------------------------------------------------------------------------------

def _random_radial_source(rng):
    r0 = rng.uniform(0.6, 1.0)
    a = rng.uniform(-0.08, 0.08, 5)
    c = rng.uniform(0.1, 0.4)
    x, y, z = "sin(u)*cos(v)", "sin(u)*sin(v)", "cos(u)"
    return (f"{r0:.4f} * (1 + {c:.4f}*t) + {a[0]:.4f}*{x} + {a[1]:.4f}*{z}^2 "
            f"+ {a[2]:.4f}*{x}*{y} + {a[3]:.4f}*sin({z} + t) + {a[4]:.4f}*{y}*{z}")


def c03_smooth(seed=3, families=10, h=1e-4, tol_fixture=1e-5, tol_random=1e-4):
    rows = []
    E, H = SPACES["E3"], SPACES["H3"]
    r = S.schlafli_residual_smooth(S.sphere_family(E, 1.0), 0.0, h)
    rows += [
        check("c03/E3-sphere", "int H' dA", r.int_H_prime, 8 * math.pi, tol_fixture),
        check("c03/E3-sphere", "1/2 int <I', II> dA", r.int_half_Ip_II, -8 * math.pi, tol_fixture),
        check("c03/E3-sphere", "smooth residual", r.value, 0.0, tol_fixture, r.error_budget),
    ]
    r = S.schlafli_residual_smooth(S.sphere_family(H, 1.0), 0.0, h)
    want = -8 * math.pi * math.sinh(1.0) ** 2
    rows += [
        check("c03/H3-sphere", "S/(m+1) V'", r.lhs, want, tol_fixture),
        check("c03/H3-sphere", "int H' + 1/2 <I', II>", r.rhs, want, tol_fixture),
        check("c03/H3-sphere", "smooth residual", r.value, 0.0, tol_fixture, r.error_budget),
    ]
    for name, sp in SPACES.items():
        rng = _rng(seed, 3, len(name), ord(name[0]))
        for i in range(families):
            src = _random_radial_source(rng)
            fam = S.SurfaceFamily(S.expr_radial_surface(sp, src), (-0.5, 0.5))
            r = S.schlafli_residual_smooth(fam, 0.0, h)
            rows.append(check(f"c03/{name}/expr{i:02d}", "smooth residual", r.value, 0.0, tol_random,
                              r.error_budget, seed))
    return rows


# 4 ---------------------------------------------------------------------------------------------

def c04_desitter(h=1e-4, tol=1e-5):
    r = S.schlafli_residual_smooth(S.desitter_family(1.0), 0.0, h)
    want = -8 * math.pi * math.cosh(1.0) ** 2
    return [
        check("c04/dS-slice", "-m K V'", r.lhs, want, tol),
        check("c04/dS-slice", "int H' + 1/2 <I', II>", r.rhs, want, tol),
        check("c04/dS-slice", "Lorentzian residual", r.value, 0.0, tol, r.error_budget),
    ]


# 5 ---------------------------------------------------------------------------------------------

def c05_flex(seed=5, steps=50, step_size=1e-2, samples=40_000, drift_tol=1e-9, tmc_tol=1e-6):
    start = P.steffen()
    states = P.flex_continuation(start, steps, step_size).states
    L0 = start.edge_lengths()
    drift = max(float(np.max(np.abs(s.edge_lengths() - L0))) for s in states)
    T = np.array([P.total_mean_curvature_poly(s) for s in states])
    tmc_var = float(np.max(np.abs(T - T[0])) / abs(T[0]))
    motion = float(np.max(np.abs(states[-1].vertices - states[0].vertices)))
    exact = np.array([s.signed_volume_flat() for s in states])
    vols, errs = [], []
    for k, s in enumerate(states):
        v, e = P.poly_volume(s, "mc", samples=samples, seed=seed * 1000 + k)
        vols.append(v)
        errs.append(e)
    vols, errs = np.array(vols), np.array(errs)
    dv = np.abs(vols - vols[0])
    budget = 4 * np.sqrt(errs**2 + errs[0] ** 2)
    worst = int(np.argmax(dv - budget))
    return [
        at_most("c05/steffen", "max edge-length drift", drift, drift_tol),
        at_least("c05/steffen", "max vertex displacement (flex is non-trivial)", motion, 0.05),
        at_most("c05/steffen", "relative variation of sum W (pi - theta)", tmc_var, tmc_tol),
        check("c05/steffen", "generalised volume drift (exact)", float(np.max(np.abs(exact - exact[0]))),
              0.0, 1e-9),
        check("c05/steffen", "volume drift (Monte Carlo)", float(dv[worst]), 0.0, 0.0,
              float(budget[worst]), seed),
    ]


# 6 ---------------------------------------------------------------------------------------------

def c06_deform(seed=6, trials=100, m=3, sv_tol=1e-8):
    rng = _rng(seed, 6)
    total_null = 0
    min_ratio = math.inf
    for _ in range(trials):
        d = rng.uniform(0.2, 2.0, m) * rng.choice([-1.0, 1.0], m)
        A = S.kulkarni_nomizu_system(np.diag(d))
        s = np.linalg.svd(A, compute_uv=False)
        ratio = float(s.min() / s.max())
        total_null += int(np.sum(s <= sv_tol * s.max()))
        min_ratio = min(min_ratio, ratio)
    return [
        check("c06/KN-system", "total nullity over trials", total_null, 0, 0, seed=seed),
        at_least("c06/KN-system", "min relative singular value", min_ratio, sv_tol, seed=seed),
    ]


# 7 ---------------------------------------------------------------------------------------------

def c07_steiner_crofton(seed=7, crofton_samples=1_000_000, eps_samples=200_000, eps_list=(0.1, 0.3, 0.5),
                        sigmas=4.0, workers=1):
    E = SPACES["E3"]
    ball = IG.convex_body(S.geodesic_sphere(E, 1.0))
    rows = []
    p1, e1 = IG.crofton_lines_mc(ball, crofton_samples, seed, workers)
    p2, e2 = IG.crofton_planes_mc(ball, crofton_samples, seed + 1, workers)
    rows.append(check("c07/unit-ball", "P1 (lines)", p1, 2 * math.pi**2, 0.0, sigmas * e1, seed))
    rows.append(check("c07/unit-ball", "P2 (planes)", p2, 4 * math.pi, 0.0, sigmas * e2, seed + 1))
    ell = IG.convex_body(S.ellipsoid_radial(E, 1, 1, 2))
    st = IG.steiner_from_curvature(ell)
    rows.append(check("c07/ellipsoid-112", "eps^3 coefficient", st.coefficients[3], 4 * math.pi / 3, 1e-9))
    series = []
    for k, eps in enumerate(eps_list):
        v, e = IG.eps_volume_direct(ell, eps, eps_samples, seed + 10 + k, workers)
        rows.append(check("c07/ellipsoid-112", f"V_eps at eps={eps:g}", v, st(eps), 0.0, sigmas * e, seed + 10 + k))
        series.append((eps, float(st(eps)), v, e))
    return rows, {"steiner_ellipsoid": (("eps", "polynomial", "monte_carlo", "std_error"), series)}


# 8 ---------------------------------------------------------------------------------------------

def c08_tube(seed=8, samples=200_000, eps=0.2, sigmas=4.0, workers=1):
    H = SPACES["H3"]
    ball = IG.convex_body(S.geodesic_sphere(H, 1.0))
    rows = [check("c08/H3-sphere", "tube growth r=1, eps=0.5", IG.tube_growth_h3(ball, 0.5),
                  ball_volume_closed(H, 1.5), 1e-8)]
    body = IG.convex_body(S.ellipsoid_radial(H, 0.6, 0.7, 0.9))
    v, e = IG.eps_volume_direct(body, eps, samples, seed, workers)
    rows.append(check("c08/H3-ellipsoid", f"tube growth eps={eps:g} vs Monte Carlo",
                      IG.tube_growth_h3(body, eps), v, 0.0, sigmas * e, seed))
    return rows


# 9 ---------------------------------------------------------------------------------------------

def _alexandrov_bodies(seed, per_space):
    out = []
    for name, sp in SPACES.items():
        rng = _rng(seed, 9, ord(name[0]))
        lo, hi = (0.6, 1.6) if sp.K == 0 else (0.45, 0.95)
        made = 0
        while made < per_space:
            kind = made % 4
            if kind == 0:
                s, tag = S.geodesic_sphere(sp, rng.uniform(lo, hi)), "sphere"
            elif kind in (1, 2):
                a, b, c = rng.uniform(lo, hi, 3)
                s, tag = S.ellipsoid_radial(sp, a, b, c), "ellipsoid"
            else:
                s, tag = S.perturbed_sphere(sp, rng.uniform(lo, hi), rng.uniform(-0.04, 0.04, 6)), "perturbed"
            try:
                body = IG.convex_body(s)
            except IG.NotConvex:
                continue
            out.append((f"{name}/{tag}{made:02d}", tag, body))
            made += 1
    return out


def c09_alexandrov(seed=9, per_space=11, slack=1e-8):
    rows, series = [], []
    for oid, tag, body in _alexandrov_bodies(seed, per_space):
        rep = F.alexandrov_compare(body)
        rows.append(at_least(f"c09/{oid}", "P2(sphere) - P2(S)", rep.difference, 0.0, slack, seed))
        rows.append(check(f"c09/{oid}", "equality flag", float(rep.equality), float(tag == "sphere"), 0))
        series.append((oid, rep.area, rep.difference, rep.max_umbilic_gap))
    return rows, {"alexandrov_gap": (("body", "area", "p2_gap", "max_umbilic_gap"), series)}


# 10 --------------------------------------------------------------------------------------------

def _umbilic_catalog():
    E, Sp, H = SPACES["E3"], SPACES["S3"], SPACES["H3"]
    return [
        ("E3/sphere", True, S.geodesic_sphere(E, 1.3)),
        ("S3/sphere", True, S.geodesic_sphere(Sp, 1.0)),
        ("H3/sphere", True, S.geodesic_sphere(H, 1.0)),
        ("E3/ellipsoid-radial", False, S.ellipsoid_radial(E, 1, 1, 2)),
        ("H3/ellipsoid-radial", False, S.ellipsoid_radial(H, 0.6, 0.7, 0.9)),
        ("H3/perturbed-sphere", False, S.perturbed_sphere(H, 0.8, [0.05, 0.03, 0.04])),
        ("E3/torus", False, S.torus()),
        ("S3/clifford-torus", False, S.clifford_torus()),
    ]


def c10_umbilic(seed=10, points=1000, tol=1e-10, h2_tol=1e-8):
    rows = []
    for oid, is_sphere, surf in _umbilic_catalog():
        rng = _rng(seed, 10, len(oid))
        (a, b), (c, d) = surf.domain
        pad = 0.02 * (b - a) if surf.domain == S.POLAR_DOMAIN else 0.0
        u = rng.uniform(a + pad, b - pad, points)
        v = rng.uniform(c, d, points)
        rep = F.umbilic_inequality(surf, u, v)
        rows.append(at_least(f"c10/{oid}", "min umbilic residual", rep.min_residual, 0.0, tol, seed))
        rows.append(check(f"c10/{oid}", "max |2H2 - (Sbar - S/3)|", rep.max_h2_residual, 0.0, h2_tol, 0.0, seed))
        rows.append(check(f"c10/{oid}", "fraction of equality points", float(np.mean(rep.equality)),
                          1.0 if is_sphere else 0.0, 0.0, 0.0, seed))
    return rows


# 11 --------------------------------------------------------------------------------------------

FOLIATION_LABELS = {"sigma2": "mKV = 2 int H2 + boundary", "trace": "mKV = int (H^2 - tr III) + boundary", "scalar": "m^2 KV = int S_leaf + boundary"}


def c11_foliation(tol=1e-5, R=1.0):
    rows = []
    for name, sp in SPACES.items():
        rep = F.foliation_identities(F.FoliationSpec(S.ball_foliation(sp, R)))
        for key, label in FOLIATION_LABELS.items():
            r = getattr(rep, key)
            rows.append(check(f"c11/{name}-ball", label, r.lhs, r.rhs, tol, r.error_budget))
        if name == "H3":
            want = 8 * math.pi * R - 4 * math.pi * math.sinh(2 * R)
            rows.append(check("c11/H3-ball", "scalar identity, left side", rep.scalar.lhs, want, tol))
            rows.append(check("c11/H3-ball", "scalar identity, right side", rep.scalar.rhs, want, tol))
    return rows


# 12 --------------------------------------------------------------------------------------------

def c12_warped(tol=1e-10):
    rows = []
    for name, spec in F.WARPED_CATALOG.items():
        r1, r2 = F.warped_einstein_check(spec)
        rows.append(check(f"c12/{name}", "max |f'' + k' f|", r1, 0.0, tol))
        rows.append(check(f"c12/{name}", "max |k - k' f^2 - f'^2|", r2, 0.0, tol))
    return rows


# 13 --------------------------------------------------------------------------------------------

def _fd_derivs(prog, u, v, t, h=1e-4):
    def f(du=0.0, dv=0.0, dt=0.0):
        return float(evaluate(prog, {"u": u + du, "v": v + dv, "t": t + dt}))

    def d1(fn, k):
        a = (fn(h) - fn(-h)) / (2 * h)
        b = (fn(h / 2) - fn(-h / 2)) / h
        return (4 * b - a) / 3

    def d2(fn):
        f0 = fn(0.0)
        a = (fn(h) - 2 * f0 + fn(-h)) / h**2
        b = (fn(2 * h) - 2 * f0 + fn(-2 * h)) / (4 * h**2)
        return (4 * a - b) / 3

    du = d1(lambda s: f(du=s), 0)
    dv = d1(lambda s: f(dv=s), 0)
    dt = d1(lambda s: f(dt=s), 0)
    duu = d2(lambda s: f(du=s))
    dvv = d2(lambda s: f(dv=s))
    duv = d1(lambda s: (f(du=s, dv=h) - f(du=s, dv=-h)) / (2 * h), 0)
    return np.array([du, dv, dt, duu, duv, dvv]), f()


def c13_exprlang(seed=13, programs=1000, fuzz=2000, tol=1e-6):
    rng = _rng(seed, 13)
    worst = 0.0
    for _ in range(programs):
        src = random_program(rng, depth=4)
        prog = parse(src)
        u, v, t = rng.uniform(-1, 1, 3)
        jv = eval_jet(prog, u, v, t)
        jet = np.array([jv.du, jv.dv, jv.dt, jv.duu, jv.duv, jv.dvv], float)
        fd, val = _fd_derivs(prog, u, v, t)
        scale = 1.0 + max(abs(val), float(np.max(np.abs(jet))))
        worst = max(worst, float(np.max(np.abs(jet - fd))) / scale)
    crashes = 0
    unpositioned = 0
    for _ in range(fuzz):
        text = random_text(rng)
        try:
            parse(text)
        except ExprError as exc:
            if not (exc.line >= 1 and exc.col >= 1):
                unpositioned += 1
        except Exception:  # noqa: BLE001 - anything else is a crash
            crashes += 1
    return [
        check("c13/exprlang", "max relative jet - finite difference", worst, 0.0, tol, 0.0, seed),
        check("c13/parser-fuzz", "crashes", crashes, 0, 0, 0.0, seed),
        check("c13/parser-fuzz", "rejections without position", unpositioned, 0, 0, 0.0, seed),
    ]


CRITERIA = {
    1: c01_polyhedral,
    2: c02_euclidean,
    3: c03_smooth,
    4: c04_desitter,
    5: c05_flex,
    6: c06_deform,
    7: c07_steiner_crofton,
    8: c08_tube,
    9: c09_alexandrov,
    10: c10_umbilic,
    11: c11_foliation,
    12: c12_warped,
    13: c13_exprlang,
}


def run_criterion(n: int, **kw) -> tuple[list[Row], dict]:
    """Rows (and optional plot series) of criterion ``n``."""
    out = CRITERIA[n](**kw)
    if isinstance(out, tuple):
        return out
    return out, {}
