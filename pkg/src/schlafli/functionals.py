"""The P2 functional, Alexandrov comparison, umbilicity, foliations and warped products.

Everything here uses the signed conventions of :mod:`schlafli.surfaces`
(outward normal, round spheres have H < 0).  With them

    2 P2 = int H dA - 2 eps K V,
    P2'  = -1/4 int <I', II - H I> dA   (any variation),
    P2'  = -int f K_e dA,  A' = -int f H dA   (normal variations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exprlang.evaluate import evaluate
from .exprlang.jet import Jet
from .exprlang.parser import ExprProgram, parse
from .integral_geom import ConvexBody
from .polyhedra import Residual
from .spaceform import GeometryError, SpaceForm, ball_volume_closed
from .surfaces import (
    NoConvergence,
    NotClosed,
    NotNormalGenerator,
    ParamSurface,
    SurfaceFamily,
    _fd,
    _gl,
    _volume_rate,
    enclosed_volume,
    quadrature_grid,
    surface_integral,
    tensor_inner,
)


class NoMatchingSphere(GeometryError):
    pass


class NonInjectiveSweep(GeometryError):
    pass


class NonPositiveWarp(GeometryError):
    pass


# -- P2 ----------------------------------------------------------------------------------------

@dataclass(frozen=True)
class P2Value:
    K0: float
    eps: int
    A: float
    V: float
    int_H: float

    @property
    def P2(self) -> float:
        return 0.5 * (self.int_H - 2 * self.eps * self.K0 * self.V)


def p2(surface: ParamSurface, volume: float | None = None) -> P2Value:
    """P2 of a closed surface.  De Sitter slices need ``volume`` (no enclosed region)."""
    sp = surface.space
    if not surface.closed:
        raise NotClosed("P2 needs a closed surface")
    if volume is None:
        if sp.signature == "lorentzian":
            raise NotClosed("pass the volume explicitly for de Sitter slices")
        volume = enclosed_volume(surface)[0] if sp.K != 0 else 0.0
    A = surface_integral(surface, "1")
    iH = surface_integral(surface, "H")
    return P2Value(sp.K, sp.epsilon, A, float(volume), iH)


@dataclass(frozen=True)
class P2Residuals:
    general: Residual
    normal: Residual | None
    area: Residual | None
    tangential: float


def _grid_sums(family, t, h, n, rtol, fn):
    surf = family.at(t)
    prev = None
    for level in range(5):
        U, V, W = quadrature_grid(surf.domain, n, 2**level)

        def forms(s):
            g = family.at(s).geometry(U, V, 2)
            return np.concatenate([g.I.reshape(*U.shape, 4), g.H[..., None],
                                   g.area_element[..., None]], -1)

        d = _fd(forms, t, h)
        g = surf.geometry(U, V, 2)
        vals = np.stack(fn(g, d[..., :4].reshape(*U.shape, 2, 2), d[..., 4], d[..., 5]), 0)
        tot = np.sum(vals * W, axis=(-2, -1))
        if prev is not None and np.all(np.abs(tot - prev) <= rtol * np.maximum(np.abs(tot), 1.0)):
            return tot, np.abs(tot - prev)
        prev = tot
    raise NoConvergence("variation integrals did not settle")


def p2_variation_residuals(family: SurfaceFamily, t: float = 0.0, h: float = 1e-4, n: int = 16,
                           rtol: float = 1e-10, normal: bool = True,
                           tangential_tol: float = 1e-9) -> P2Residuals:
    """Residuals of the three P2 / area variation identities at time t.

    P2' itself comes from differencing int H dA and from V'.  The normal
    identities are only checked when ``normal`` is true; then a generator
    with a tangential part raises :class:`NotNormalGenerator`.
    """
    sp = family.space

    def integrands(g, Ip, Hp, dAp):
        f, _ = g.generator()
        dA = g.area_element
        II_HI = g.II - g.H[..., None, None] * g.I
        return (
            (Hp * dA + g.H * dAp),                      # d/dt of int H dA
            -0.25 * tensor_inner(g.I, Ip, II_HI) * dA,  # general RHS
            -f * g.Ke * dA,                             # normal P2'
            -f * g.H * dA,                              # normal A'
            dAp,                                        # A'
        )

    tot, err = _grid_sums(family, t, h, n, rtol, integrands)
    dH, gen, nP2, nA, Ap = (float(x) for x in tot[:5])
    U, V, _ = quadrature_grid(family.at(t).domain, 8, 1)
    tang = float(np.max(family.at(t).geometry(U, V, 1).generator()[1]))
    Vp = 0.0 if sp.K == 0 else _volume_rate(family, t, h)
    P2p = 0.5 * dH - sp.epsilon * sp.K * Vp
    budget = float(err[0] + err[1]) + 10 * h**4 * max(1.0, abs(P2p))
    general = Residual(P2p - gen, P2p, gen, budget)
    nres = ares = None
    if normal:
        if tang > tangential_tol:
            raise NotNormalGenerator(f"generator has a tangential part of size {tang:.3g}")
        nres = Residual(P2p - nP2, P2p, nP2, budget + float(err[2]))
        ares = Residual(Ap - nA, Ap, nA, float(err[3] + err[4]) + 10 * h**4 * max(1.0, abs(Ap)))
    return P2Residuals(general, nres, ares, tang)


# -- Alexandrov comparison -------------------------------------------------------------------------

def sphere_radius_for_area(space: SpaceForm, A: float) -> float:
    """Radius r of the geodesic sphere with area 4 pi sn(r)^2 = A."""
    s = math.sqrt(A / (4 * math.pi))
    if space.K == 0:
        return s
    k = math.sqrt(abs(space.K))
    if space.K > 0:
        if s * k > 1 + 1e-15:
            raise NoMatchingSphere("area exceeds that of a great sphere")
        return math.asin(min(1.0, s * k)) / k
    return math.asinh(s * k) / k


def p2_sphere(space: SpaceForm, r: float) -> float:
    sn, cs = float(space.sn(r)), float(space.cs(r))
    V = ball_volume_closed(space, r) if space.K != 0 else 0.0
    return -4 * math.pi * sn * cs - space.epsilon * space.K * V


def _umbilic_gap(g):
    """|k1 - k2| on a grid without the square-root loss near umbilics."""
    B = g.B
    disc = (B[..., 0, 0] - B[..., 1, 1]) ** 2 + 4 * B[..., 0, 1] * B[..., 1, 0]
    return np.sqrt(np.maximum(disc, 0.0))


@dataclass(frozen=True)
class AlexandrovReport:
    area: float
    radius: float
    p2_sphere: float
    p2_surface: float
    difference: float
    max_umbilic_gap: float
    equality: bool


def alexandrov_compare(surface: ParamSurface, n: int = 24, umbilic_tol: float = 1e-8) -> AlexandrovReport:
    """P2 of the equal-area geodesic sphere minus P2 of a convex surface."""
    body = surface if isinstance(surface, ConvexBody) else ConvexBody.from_surface(surface)
    sp = body.space
    r = sphere_radius_for_area(sp, body.A)
    ps = p2_sphere(sp, r)
    pS = 0.5 * (body.sign_flip * body.M - 2 * sp.epsilon * sp.K * body.V)
    U, V, _ = quadrature_grid(body.boundary.domain, n, 2)
    gap = float(np.max(_umbilic_gap(body.boundary.geometry(U, V, 2))))
    return AlexandrovReport(body.A, r, ps, pS, ps - pS, gap, gap <= umbilic_tol)


# -- K_e = k H ----------------------------------------------------------------------------------------

@dataclass(frozen=True)
class KeProportional:
    verdict: str  # "umbilic" | "not_applicable" | "violated"
    ratio_spread: float
    max_umbilic_gap: float


def ke_proportional_check(surface: ParamSurface, tol: float = 1e-8, n: int = 24,
                          gap_tol: float | None = None) -> KeProportional:
    """If K_e / H is constant (relative spread <= tol), confirm umbilicity."""
    body = ConvexBody.from_surface(surface)
    U, V, _ = quadrature_grid(body.boundary.domain, n, 2)
    g = body.boundary.geometry(U, V, 2)
    ratio = g.Ke / g.H
    spread = float((ratio.max() - ratio.min()) / max(abs(ratio.mean()), 1e-300))
    gap = float(np.max(_umbilic_gap(g)))
    if spread > tol:
        return KeProportional("not_applicable", spread, gap)
    scale = float(np.max(np.abs(g.H)))
    gap_tol = 10 * math.sqrt(tol) * scale if gap_tol is None else gap_tol
    return KeProportional("umbilic" if gap <= gap_tol else "violated", spread, gap)


# -- umbilic inequality ------------------------------------------------------------------------------

@dataclass(frozen=True)
class UmbilicReport:
    residual: np.ndarray      # H^2/m - (Sbar/(m-1) - S/(m+1)),  >= 0
    h2_residual: np.ndarray   # 2 H2 - (Sbar - (m-1)/(m+1) S)
    gap: np.ndarray           # |k1 - k2|
    equality: np.ndarray

    @property
    def min_residual(self) -> float:
        return float(np.min(self.residual))

    @property
    def max_h2_residual(self) -> float:
        return float(np.max(np.abs(self.h2_residual)))


def umbilic_inequality(surface: ParamSurface, u, v, equality_tol: float = 1e-8) -> UmbilicReport:
    sp = surface.space
    if sp.signature != "riemannian":
        raise ValueError("the umbilic inequality is stated for Riemannian space forms")
    m = sp.m
    g = surface.geometry(np.asarray(u, float), np.asarray(v, float), 3)
    Sbar = g.S_intrinsic
    S = sp.S
    res = g.H**2 / m - (Sbar / (m - 1) - S / (m + 1))
    h2 = 2 * g.H2 - (Sbar - (m - 1) / (m + 1) * S)
    gap = _umbilic_gap(g)
    return UmbilicReport(res, h2, gap, gap <= equality_tol)


# -- foliations --------------------------------------------------------------------------------------

@dataclass(frozen=True)
class FoliationSpec:
    """Leaves ``family.at(t)`` for t in [t0, t1]; a degenerate start leaf is a point."""

    family: SurfaceFamily
    t0: float = 0.0
    t1: float = 1.0
    degenerate_start: bool = True
    nodes: int = 24
    n: int = 16


@dataclass(frozen=True)
class FoliationReport:
    sigma2: Residual    # m K V = 2 int H2 + boundary term
    trace: Residual     # m K V = int (H^2 - tr III) + boundary term
    scalar: Residual    # m^2 K V = int S_leaf + boundary term
    volume: float
    boundary_H: float
    pointwise_trace: float     # max |H^2 - tr III - 2 H2| / max(1, H^2) on the sampled leaves
    minimal_leaves: bool
    contradiction_margin: float | None


def foliation_identities(fol: FoliationSpec, minimal_tol: float = 1e-9,
                         check_injective: bool = True) -> FoliationReport:
    """Residuals of the three volume identities for a foliated domain.

    Omega-integrals are  int_{t0}^{t1} int_{leaf} field |f| dA dt.
    """
    fam = fol.family
    sp = fam.space
    m = sp.m
    x, w = _gl(fol.nodes)
    ts = 0.5 * (fol.t1 - fol.t0) * x + 0.5 * (fol.t0 + fol.t1)
    wt = 0.5 * (fol.t1 - fol.t0) * w
    acc = np.zeros(5)
    signs = set()
    trace_err = 0.0
    max_H = 0.0

    def leaf_fields(g):
        f, _ = g.generator()
        trIII = np.trace(np.linalg.solve(g.I, g.III), axis1=-2, axis2=-1)
        af = np.abs(f)
        return f, trIII, np.stack([af, 2 * g.H2 * af, (g.H**2 - trIII) * af, g.S_intrinsic * af, trIII * af])

    for ti, wi in zip(ts, wt):
        leaf = fam.at(float(ti))
        U, V, W = quadrature_grid(leaf.domain, fol.n, 2)
        g = leaf.geometry(U, V, 3)
        f, trIII, vals = leaf_fields(g)
        fmax = np.max(np.abs(f))
        if fmax > 0:
            signs.update(np.unique(np.sign(f[np.abs(f) > 1e-9 * fmax])).tolist())
        trace_err = max(trace_err, float(np.max(np.abs(g.H**2 - trIII - 2 * g.H2) / np.maximum(1.0, g.H**2))))
        max_H = max(max_H, float(np.max(np.abs(g.H))))
        acc += wi * np.sum(vals * g.area_element * W, axis=(-2, -1))
    if check_injective and (len(signs) != 1):
        raise NonInjectiveSweep("leaf speed vanishes or changes sign")
    s = 1.0 if signs == {1.0} else -1.0
    outer = surface_integral(fam.at(fol.t1), "H", n=fol.n)
    inner = 0.0 if fol.degenerate_start else surface_integral(fam.at(fol.t0), "H", n=fol.n)
    bH = s * (outer - inner)
    vol, iH2, iTr, iS, iIII = (float(a) for a in acc)
    K = sp.K
    budget = 1e-9 * (abs(iS) + abs(bH) + abs(iH2) + 1.0)
    sigma2 = Residual(m * K * vol - (iH2 + bH), m * K * vol, iH2 + bH, budget)
    trace = Residual(m * K * vol - (iTr + bH), m * K * vol, iTr + bH, budget)
    Sres = Residual(m * m * K * vol - (iS + bH), m * m * K * vol, iS + bH, budget)
    minimal = max_H <= minimal_tol
    margin = None
    if minimal and K > 0:
        # minimal leaves: lhs m K V > 0 while the rhs reduces to -int tr III dV <= 0
        margin = m * K * vol + iIII
    return FoliationReport(sigma2, trace, Sres, vol, bH, trace_err, minimal, margin)


# -- warped products ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpedProductSpec:
    """Metric dt^2 + f(t)^2 g0 with g0 of curvature k; Einstein constant k'."""

    k: float
    k_prime: float
    f: object  # expression in t, ExprProgram, or callable on jets
    interval: tuple
    grid: int = 201


def _warp_jet(spec: WarpedProductSpec, ts):
    T = Jet.variable(ts, "u", 2)
    f = spec.f
    if isinstance(f, str):
        f = parse(f)
    if isinstance(f, ExprProgram):
        out = evaluate(f, {"t": T, "u": T, "v": 0.0})
    else:
        out = f(T)
    if not isinstance(out, Jet):
        out = Jet.constant(np.broadcast_to(np.asarray(out, float), ts.shape).copy(), 2)
    return out


def warped_einstein_check(spec: WarpedProductSpec) -> tuple[float, float]:
    """Max residuals of f'' + k' f = 0 and k - k' f^2 - f'^2 = 0 on interior nodes."""
    lo, hi = spec.interval
    ts = lo + (hi - lo) * (np.arange(spec.grid) + 0.5) / spec.grid
    F = _warp_jet(spec, ts)
    f, f1, f2 = F.value, F.d(1, 0), F.d(2, 0)
    if np.any(f <= 0):
        raise NonPositiveWarp("warp function must be positive inside the interval")
    r1 = float(np.max(np.abs(f2 + spec.k_prime * f)))
    r2 = float(np.max(np.abs(spec.k - spec.k_prime * f**2 - f1**2)))
    return r1, r2


WARPED_CATALOG = {
    "round-sphere": WarpedProductSpec(1.0, 1.0, "sin(t)", (0.0, math.pi)),
    "flat-cone": WarpedProductSpec(1.0, 0.0, "t", (0.0, 3.0)),
    "hyperbolic-cosh": WarpedProductSpec(-1.0, -1.0, "cosh(t)", (-2.0, 2.0)),
}
