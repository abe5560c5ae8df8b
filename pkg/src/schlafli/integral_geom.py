"""Steiner polynomials, quermassintegrals, Crofton measures and tube growth.

Convex bodies are star-shaped radial graphs about the model origin, so the
Monte Carlo routines can use the radial function for cheap membership and
the boundary chart for distances.  Curvature integrals here are unsigned
(positive for convex bodies); :class:`ConvexBody` flips the sign of the
signed mean curvature once and keeps the factor in ``sign_flip``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.spatial import cKDTree

from .spaceform import (
    ChartUnbounded,
    GeometryError,
    PolarChart,
    RegionSpec,
    SpaceForm,
    _block_rng,
    distance,
    mc_blocks,
    region_volume_mc,
)
from .surfaces import (
    ParamSurface,
    _polar_point,
    enclosed_volume,
    quadrature_grid,
    surface_integral,
)


class NotConvex(GeometryError):
    pass


class EstimateUnavailable(GeometryError):
    pass


CERT_GRID = 24


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex body bounded by a radial graph, with cached A, V and M."""

    boundary: ParamSurface
    A: float
    V: float
    M: float
    int_Ke: float
    sign_flip: float
    rho_range: tuple = field(default=(0.0, 0.0))

    @property
    def space(self) -> SpaceForm:
        return self.boundary.space

    @property
    def center(self) -> np.ndarray:
        c = self.boundary.center
        return self.space.origin() if c is None else c

    @classmethod
    def from_surface(cls, surface: ParamSurface, n: int = CERT_GRID) -> "ConvexBody":
        sp = surface.space
        if sp.signature != "riemannian" or not surface.closed:
            raise NotConvex("convex bodies need a closed surface in a Riemannian model")
        U, V, _ = quadrature_grid(surface.domain, n, 2)
        g = surface.geometry(U, V, 2)
        H, Ke = g.H, g.Ke
        if np.any(Ke <= 0):
            raise NotConvex(f"extrinsic curvature not positive (min {Ke.min():.3g})")
        sgn = np.sign(H)
        if np.any(sgn == 0) or np.any(sgn != sgn.flat[0]):
            raise NotConvex("mean curvature changes sign")
        flip = float(sgn.flat[0])
        A = surface_integral(surface, "1")
        M = flip * surface_integral(surface, "H")
        iK = surface_integral(surface, "K_e")
        vol, _ = enclosed_volume(surface)
        if min(A, vol, M) <= 0:
            raise NotConvex("degenerate body")
        if surface.radius_fn is None:
            return cls(surface, A, vol, M, iK, flip, (math.nan, math.nan))
        rr = _rho_grid(surface, 64)
        return cls(surface, A, vol, M, iK, flip, (float(rr.min()), float(rr.max())))


def convex_body(surface: ParamSurface) -> ConvexBody:
    return ConvexBody.from_surface(surface)


# -- Steiner ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteinerData:
    coefficients: tuple  # V_eps = sum c_k eps^k
    W: tuple  # W_0 .. W_3
    P: tuple  # (P_1, P_2)

    def __call__(self, eps):
        return np.polyval(self.coefficients[::-1], eps)


def steiner_from_curvature(body: ConvexBody) -> SteinerData:
    if not body.space.is_flat:
        raise ValueError("the Steiner polynomial is implemented for E^3")
    n = 3
    sig = (body.A, body.M, body.int_Ke)  # integrals of sigma_0, sigma_1, sigma_2
    coeffs = (body.V,) + tuple(s / (k + 1) for k, s in enumerate(sig))
    # W_m from  m * int sigma_{m-1} = C(n, m) W_m
    W = (body.V,) + tuple(m * sig[m - 1] / comb(n, m) for m in range(1, n + 1))
    return SteinerData(coeffs, W, (0.5 * math.pi * body.A, 0.5 * body.M))


# -- radial helpers ------------------------------------------------------------------------

def _rho_fn(surface: ParamSurface):
    if surface.radius_fn is None:
        raise ValueError("this estimator needs a radial boundary (radius_fn)")
    return surface.radius_fn


def _rho_grid(surface, k):
    u = np.linspace(0, math.pi, k + 1)
    v = np.linspace(0, 2 * math.pi, 2 * k, endpoint=False)
    U, V = np.meshgrid(u, v, indexing="ij")
    return np.asarray(_rho_fn(surface)(U, V, surface.t), float) * np.ones_like(U)


def _dir_to_uv(w):
    u = np.arccos(np.clip(w[..., 2], -1.0, 1.0))
    v = np.arctan2(w[..., 1], w[..., 0]) % (2 * math.pi)
    return u, v


def _rho_dir(body: ConvexBody, w):
    u, v = _dir_to_uv(w)
    return np.asarray(_rho_fn(body.boundary)(u, v, body.boundary.t), float) * np.ones_like(u)


def _boundary_at(body: ConvexBody, w):
    rho = _rho_dir(body, w)
    return np.stack(np.broadcast_arrays(*_polar_point(body.space, rho, [w[..., i] for i in range(3)])), -1)


def _local_coords(body: ConvexBody, x):
    """(radius, unit direction) of points relative to the body's center."""
    sp = body.space
    c = body.center
    if sp.is_flat:
        w = x - c
    else:
        w = x[..., 1:]
    nrm = np.linalg.norm(w, axis=-1)
    safe = np.where(nrm > 0, nrm, 1.0)
    dirs = np.where(nrm[..., None] > 0, w / safe[..., None], np.array([0.0, 0.0, 1.0]))
    r = np.asarray(distance(sp, np.broadcast_to(c, x.shape), x))
    return r, dirs


def _sphere_basis(w):
    a = np.where(np.abs(w[..., :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    e1 = a - np.sum(a * w, -1, keepdims=True) * w
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    return e1, np.cross(w, e1)


def _minimize_on_sphere(obj, w0, iters: int = 8, h: float = 1e-5):
    """Vectorised damped Newton for obj(directions) over unit directions."""
    w = w0.copy()
    f0 = obj(w)
    for _ in range(iters):
        e1, e2 = _sphere_basis(w)

        def at(a, b):
            y = w + a[..., None] * e1 + b[..., None] * e2
            return y / np.linalg.norm(y, axis=-1, keepdims=True)

        z = np.zeros(len(w))
        fp1, fm1 = obj(at(z + h, z)), obj(at(z - h, z))
        fp2, fm2 = obj(at(z, z + h)), obj(at(z, z - h))
        fpp = obj(at(z + h, z + h))
        g = np.stack([(fp1 - fm1) / (2 * h), (fp2 - fm2) / (2 * h)], -1)
        h11 = (fp1 - 2 * f0 + fm1) / h**2
        h22 = (fp2 - 2 * f0 + fm2) / h**2
        h12 = (fpp - fp1 - fp2 + f0) / h**2
        det = h11 * h22 - h12**2
        ok = (h11 > 0) & (det > 0)
        da = np.where(ok, -(h22 * g[:, 0] - h12 * g[:, 1]) / np.where(ok, det, 1), -g[:, 0])
        db = np.where(ok, -(h11 * g[:, 1] - h12 * g[:, 0]) / np.where(ok, det, 1), -g[:, 1])
        step = np.hypot(da, db)
        scale = np.minimum(1.0, 0.2 / np.maximum(step, 1e-300))
        da, db = da * scale, db * scale
        for _ in range(6):
            cand = at(da, db)
            fc = obj(cand)
            better = fc <= f0
            w = np.where(better[:, None], cand, w)
            f0 = np.where(better, fc, f0)
            if better.all():
                break
            da, db = np.where(better, 0, da / 2), np.where(better, 0, db / 2)
        if np.max(step) < 1e-10:
            break
    return w, f0


# -- epsilon neighbourhoods ----------------------------------------------------------------------

class _EpsMembership:
    def __init__(self, body: ConvexBody, eps: float, grid: int = 160):
        self.body, self.eps = body, eps
        u = (np.arange(grid) + 0.5) * math.pi / grid
        v = np.arange(2 * grid) * math.pi / grid
        U, V = np.meshgrid(u, v, indexing="ij")
        pts = body.boundary.point(U, V).reshape(-1, body.space.ambient_dim)
        self.pts = pts
        self.tree = cKDTree(pts)
        from .surfaces import direction
        self.dirs = np.stack(direction(U, V), -1).reshape(-1, 3)
        lo, hi = body.rho_range
        self.lo, self.hi = lo, hi

    def __call__(self, x):
        body, eps, sp = self.body, self.eps, self.body.space
        r, w = _local_coords(body, x)
        out = r <= self.lo
        band = (~out) & (r <= self.hi + eps)
        if not band.any():
            return out
        xb, rb, wb = x[band], r[band], w[band]
        res = rb <= _rho_dir(body, wb)
        todo = np.flatnonzero(~res)
        if todo.size:
            xt = xb[todo]
            _, idx = self.tree.query(xt)
            dg = np.asarray(distance(sp, xt, self.pts[idx]))
            near = dg <= eps
            cand = np.flatnonzero(~near & (dg <= eps + 0.25))
            if cand.size:
                xc = xt[cand]
                _, d = _minimize_on_sphere(
                    lambda ww: np.asarray(distance(sp, xc, _boundary_at(body, ww))), self.dirs[idx[cand]])
                near[cand] = np.minimum(d, dg[cand]) <= eps
            res[todo] = near
        out[band] = res
        return out


def eps_volume_direct(body: ConvexBody, eps: float, samples: int = 200_000, seed: int = 0,
                      workers: int = 1):
    """Monte Carlo volume of {x : dist(x, K) <= eps}; returns (estimate, std_error)."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    sp = body.space
    R = (body.rho_range[1] + eps) * 1.0001 + 1e-9
    if R > sp.max_radius:
        raise ChartUnbounded("the neighbourhood does not fit in a polar chart")
    region = RegionSpec(sp, _EpsMembership(body, eps), PolarChart(body.center, R))
    return region_volume_mc(region, samples, seed, workers)


# -- Crofton ------------------------------------------------------------------------------

def _uniform_dirs(rng, n):
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _flat_only(body: ConvexBody):
    if not body.space.is_flat:
        raise ValueError("Crofton estimators are implemented in E^3")


def _golden_min(fn, a, b, iters: int = 60):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc < fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        new = np.where(left, b - g * (b - a), a + g * (b - a))
        fnew = fn(new)
        c, fc = np.where(left, new, keep), np.where(left, fnew, fkeep)
        d, fd = np.where(left, keep, new), np.where(left, fkeep, fnew)
    return np.minimum(fc, fd)


def _mc_fraction(body, samples, seed, hit_fn, workers):
    if samples < 1:
        raise EstimateUnavailable("no samples requested")

    def run(job):
        b, n = job
        return int(np.count_nonzero(hit_fn(_block_rng(seed, b), n)))

    jobs = mc_blocks(samples)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(run, jobs))
    else:
        hits = sum(map(run, jobs))
    p = hits / samples
    return p, math.sqrt(p * (1 - p) / samples)


def crofton_lines_mc(body: ConvexBody, samples: int = 1_000_000, seed: int = 0, workers: int = 1):
    """P_1 as the invariant measure of lines meeting the body; (estimate, std_error)."""
    _flat_only(body)
    lo, hi = body.rho_range
    R = 1.05 * hi
    c = body.center

    def gauge(x):
        w = x - c
        r = np.linalg.norm(w, axis=-1)
        return r / _rho_dir(body, w / np.maximum(r, 1e-300)[..., None])

    def hits(rng, n):
        d = _uniform_dirs(rng, n)
        e1, e2 = _sphere_basis(d)
        rad = R * np.sqrt(rng.random(n))
        ang = 2 * math.pi * rng.random(n)
        q = c + (rad * np.cos(ang))[:, None] * e1 + (rad * np.sin(ang))[:, None] * e2
        out = rad <= lo
        band = np.flatnonzero(~out & (rad <= hi))
        if band.size:
            qb, db = q[band], d[band]
            m = _golden_min(lambda s: gauge(qb + s[:, None] * db), np.full(band.size, -R),
                            np.full(band.size, R))
            out[band] = m <= 1.0
        return out

    p, sd = _mc_fraction(body, samples, seed, hits, workers)
    total = 2 * math.pi**2 * R**2
    return total * p, total * sd


def _support(body: ConvexBody, omega, tree, dirs):
    """h(omega) = max over the boundary of <x - c, omega>."""
    _, idx = tree.query(omega)
    c = body.center
    _, f = _minimize_on_sphere(
        lambda w: -np.einsum("ij,ij->i", _boundary_at(body, w) - c, omega), dirs[idx])
    return -f


def _normal_tree(body: ConvexBody, grid: int = 96):
    u = (np.arange(grid) + 0.5) * math.pi / grid
    v = np.arange(2 * grid) * math.pi / grid
    U, V = np.meshgrid(u, v, indexing="ij")
    g = body.boundary.geometry(U, V, 1)
    from .surfaces import direction
    dirs = np.stack(direction(U, V), -1).reshape(-1, 3)
    return cKDTree(g.normal_values.reshape(-1, 3)), dirs


def crofton_planes_mc(body: ConvexBody, samples: int = 1_000_000, seed: int = 0, workers: int = 1):
    """P_2 as the invariant measure of planes meeting the body; (estimate, std_error)."""
    _flat_only(body)
    lo, hi = body.rho_range
    R = 1.05 * hi
    tree, dirs = _normal_tree(body)

    def hits(rng, n):
        om = _uniform_dirs(rng, n)
        p = R * (2 * rng.random(n) - 1)
        out = np.abs(p) <= lo
        band = np.flatnonzero(~out & (np.abs(p) <= hi))
        if band.size:
            ob, pb = om[band], p[band]
            pos = pb > 0
            # plane <x - c, om> = p meets K iff -h(-om) <= p <= h(om)
            probe = np.where(pos[:, None], ob, -ob)
            out[band] = np.abs(pb) <= _support(body, probe, tree, dirs)
        return out

    if samples < 1:
        raise EstimateUnavailable("no samples requested")
    p, sd = _mc_fraction(body, samples, seed, hits, workers)
    total = 4 * math.pi * R
    return total * p, total * sd


# -- curved-space functionals and tube growth --------------------------------------------------------

def p_functionals_curved(body: ConvexBody):
    """(P_1, P_2) = ((pi/2) A, M/2 + K V); K = 0 gives the Euclidean values."""
    K = body.space.K
    return 0.5 * math.pi * body.A, 0.5 * body.M + K * body.V


def tube_growth_h3(body: ConvexBody, eps: float, variant: str = "corrected") -> float:
    """Volume of the eps-neighbourhood of a convex body in H^3 (K = -1).

    ``variant="printed"`` evaluates the historical closed form, which does
    not match parallel volumes (kept for the discrepancy report).
    """
    sp = body.space
    if sp.model != "hyperbolic" or sp.K != -1.0:
        raise ValueError("tube growth is stated for H^3 with K = -1")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    A0, M0, V0 = body.A, body.M, body.V
    if variant == "printed":
        return A0 * math.sinh(eps) + 4 * math.pi * (eps - math.sinh(eps)) + M0 * (math.cosh(eps) - 1) + V0
    if variant != "corrected":
        raise ValueError(f"unknown variant {variant!r}")
    s, c = math.sinh(eps), math.cosh(eps)
    return V0 + A0 * s * c + 0.5 * M0 * s * s + math.pi * (math.sinh(2 * eps) - 2 * eps)
