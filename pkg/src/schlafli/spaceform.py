"""Constant-curvature model spaces and their basic metric operations.

Curved models live on quadrics ``<x, x> = 1/K`` in a flat ambient space:
the round sphere for ``K > 0`` (Euclidean ambient form), the upper sheet
of the hyperboloid for ``K < 0`` and de Sitter space for Lorentzian
``K > 0`` (both with the Minkowski form ``diag(-1, 1, ..., 1)``).
Euclidean space uses plain coordinates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma

QUADRIC_TOL = 1e-12
MC_BLOCK = 1 << 16


class GeometryError(ValueError):
    """Base class for geometric precondition failures."""


class ModelViolation(GeometryError):
    pass


class NotJoinable(GeometryError):
    pass


class OutOfRange(GeometryError):
    pass


class ChartUnbounded(GeometryError):
    pass


@dataclass(frozen=True)
class SpaceForm:
    """Space form of dimension ``dim`` (= m + 1) and sectional curvature ``K``."""

    dim: int = 3
    K: float = 0.0
    signature: str = "riemannian"

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if self.signature not in ("riemannian", "lorentzian"):
            raise ValueError(f"unknown signature {self.signature!r}")
        if self.signature == "lorentzian" and not self.K > 0:
            raise ValueError("only de Sitter space (K > 0) is supported on the Lorentzian side")

    # named constructors
    @classmethod
    def euclidean(cls, dim: int = 3) -> "SpaceForm":
        return cls(dim, 0.0)

    @classmethod
    def sphere(cls, dim: int = 3, K: float = 1.0) -> "SpaceForm":
        return cls(dim, K)

    @classmethod
    def hyperbolic(cls, dim: int = 3, K: float = -1.0) -> "SpaceForm":
        return cls(dim, K)

    @classmethod
    def de_sitter(cls, dim: int = 3, K: float = 1.0) -> "SpaceForm":
        return cls(dim, K, "lorentzian")

    @property
    def m(self) -> int:
        return self.dim - 1

    @property
    def S(self) -> float:
        """Scalar curvature m(m+1)K."""
        return self.m * (self.m + 1) * self.K

    @property
    def epsilon(self) -> int:
        return 1 if self.signature == "riemannian" else -1

    @property
    def model(self) -> str:
        if self.signature == "lorentzian":
            return "desitter"
        if self.K == 0:
            return "euclidean"
        return "sphere" if self.K > 0 else "hyperbolic"

    @property
    def is_flat(self) -> bool:
        return self.K == 0 and self.signature == "riemannian"

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.is_flat else self.dim + 1

    @property
    def form(self) -> np.ndarray:
        """Diagonal of the ambient quadratic form."""
        g = np.ones(self.ambient_dim)
        if self.model in ("hyperbolic", "desitter"):
            g[0] = -1.0
        return g

    @property
    def radius(self) -> float:
        """Curvature radius 1/sqrt|K| (inf when flat)."""
        return math.inf if self.K == 0 else 1.0 / math.sqrt(abs(self.K))

    def inner(self, x, y):
        """Ambient form <x, y>, vectorised over leading axes."""
        return np.einsum("...i,...i->...", np.asarray(x, float) * self.form, np.asarray(y, float))

    def origin(self) -> np.ndarray:
        o = np.zeros(self.ambient_dim)
        if self.is_flat:
            return o
        if self.model == "desitter":
            o[1] = self.radius
        else:
            o[0] = self.radius
        return o

    def sn(self, r):
        """Generalised sine: the radius of a geodesic circle of radius r."""
        r = np.asarray(r, float)
        if self.K == 0:
            return r
        k = math.sqrt(abs(self.K))
        return np.sin(k * r) / k if self.K > 0 else np.sinh(k * r) / k

    def cs(self, r):
        r = np.asarray(r, float)
        if self.K == 0:
            return np.ones_like(r)
        k = math.sqrt(abs(self.K))
        return np.cos(k * r) if self.K > 0 else np.cosh(k * r)

    @property
    def max_radius(self) -> float:
        """Largest meaningful geodesic-ball radius (pi/sqrt(K) on spheres)."""
        return math.pi / math.sqrt(self.K) if self.model == "sphere" else math.inf


# -- model constraints --------------------------------------------------------

def check_point(space: SpaceForm, x, tol: float = QUADRIC_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != space.ambient_dim:
        raise ModelViolation(f"expected {space.ambient_dim} coordinates, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise ModelViolation("non-finite coordinates")
    if space.is_flat:
        return x
    target = 1.0 / space.K
    err = np.abs(space.inner(x, x) - target) / max(1.0, abs(target))
    if np.any(err > tol * np.maximum(1.0, np.einsum("...i,...i->...", x, x))):
        raise ModelViolation(f"point off the model quadric by {np.max(err):.3g}")
    if space.model == "hyperbolic" and np.any(x[..., 0] <= 0):
        raise ModelViolation("point on the lower sheet of the hyperboloid")
    return x


def project(space: SpaceForm, x) -> np.ndarray:
    """Re-normalise ambient coordinates onto the model quadric."""
    x = np.asarray(x, dtype=float)
    if space.is_flat:
        return x
    q = space.inner(x, x) * space.K
    if np.any(q <= 0):
        raise ModelViolation("cannot project a point of the wrong causal type")
    return x / np.sqrt(q)[..., None]


def check_tangent(space: SpaceForm, p, v, tol: float = 1e-10) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if space.is_flat:
        return v
    nv = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(space.inner(p, v)) * math.sqrt(abs(space.K)) > tol * np.maximum(nv, 1e-300)):
        raise ModelViolation("vector is not tangent at the base point")
    return v


# -- distance and geodesics ---------------------------------------------------

def distance(space: SpaceForm, p, q):
    """Geodesic distance; vectorised over leading axes."""
    p = check_point(space, p)
    q = check_point(space, q)
    if space.is_flat:
        return np.linalg.norm(p - q, axis=-1)
    k = math.sqrt(abs(space.K))
    d2 = space.inner(p - q, p - q) * abs(space.K)
    s2 = space.inner(p + q, p + q) * abs(space.K)
    model = space.model
    if model == "sphere":
        # 2 atan2(|p-q|, |p+q|) is accurate over the whole range [0, pi]
        return 2.0 * np.arctan2(np.sqrt(np.maximum(d2, 0)), np.sqrt(np.maximum(s2, 0))) / k
    if model == "hyperbolic":
        return 2.0 * np.arcsinh(np.sqrt(np.maximum(d2, 0)) / 2.0) / k
    # de Sitter: space-like separation needs 0 <= <p-q,p-q> and <p+q,p+q> > 0
    scale = max(1.0, float(np.max(np.abs(p))) ** 2)
    if np.any(d2 < -1e-12 * scale) or np.any(s2 <= 0):
        raise NotJoinable("points are not joined by a space-like geodesic")
    return 2.0 * np.arctan2(np.sqrt(np.maximum(d2, 0)), np.sqrt(s2)) / k


def geodesic_eval(space: SpaceForm, p, v, t):
    """Point at arclength ``t`` along the geodesic from ``p`` with unit velocity ``v``."""
    p = check_point(space, p)
    v = check_tangent(space, p, v)
    norm2 = space.inner(v, v) if not space.is_flat else np.einsum("...i,...i->...", v, v)
    if np.any(np.abs(norm2 - 1.0) > 1e-9):
        raise ModelViolation("geodesic direction must be a unit (space-like) vector")
    return exp_map(space, p, np.asarray(t, float)[..., None] * v)


def exp_map(space: SpaceForm, p, w):
    """Exponential map at ``p`` of the (space-like) tangent vector ``w``."""
    p = np.asarray(p, float)
    w = np.asarray(w, float)
    if space.is_flat:
        return p + w
    n = np.sqrt(np.maximum(space.inner(w, w), 0.0))[..., None]
    safe = np.where(n > 0, n, 1.0)
    out = space.cs(n) * p + space.sn(n) / safe * w
    out = np.where(n > 0, out, p)
    return _maybe_project(space, out)


def log_map(space: SpaceForm, p, q):
    """Tangent vector at ``p`` pointing to ``q`` with length distance(p, q)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if space.is_flat:
        return q - p
    d = np.asarray(distance(space, p, q))[..., None]
    w = q - space.K * space.inner(p, q)[..., None] * p
    nw = np.sqrt(np.maximum(space.inner(w, w), 0.0))[..., None]
    return np.where(nw > 0, w * d / np.where(nw > 0, nw, 1.0), 0.0)


def _maybe_project(space, x):
    if space.is_flat:
        return x
    drift = np.abs(space.inner(x, x) * space.K - 1.0)
    if np.any(drift > QUADRIC_TOL):
        return project(space, x)
    return x


def tangent_frame(space: SpaceForm, p) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent space at ``p``."""
    p = np.asarray(p, float)
    if space.is_flat:
        return np.eye(space.dim)
    g = space.form
    basis = []
    ref = np.vstack([p, np.eye(space.ambient_dim)])
    for e in ref[1:]:
        w = e - space.K * space.inner(p, e) * p
        for b in basis:
            w = w - space.inner(b, w) / space.inner(b, b) * b
        n2 = space.inner(w, w)
        if n2 > 1e-10:
            basis.append(w / math.sqrt(n2))
        if len(basis) == space.dim:
            break
    del g
    return np.array(basis)


# -- ball volumes ---------------------------------------------------------------

_GL64 = np.polynomial.legendre.leggauss(64)


def sphere_area_unit(m: int) -> float:
    """Area of the unit m-sphere."""
    return 2.0 * math.pi ** ((m + 1) / 2) / gamma((m + 1) / 2)


def ball_area_closed(space: SpaceForm, r):
    return sphere_area_unit(space.m) * space.sn(r) ** space.m


def ball_volume_closed(space: SpaceForm, r: float) -> float:
    """Geodesic ball volume by 64-point Gauss-Legendre on the sphere-area integrand."""
    if space.signature != "riemannian":
        raise OutOfRange("geodesic balls are only defined for Riemannian models")
    if r < 0 or r > space.max_radius * (1 + 1e-15):
        raise OutOfRange(f"radius {r} outside [0, {space.max_radius}]")
    if r == 0:
        return 0.0
    x, w = _GL64
    s = 0.5 * r * (x + 1.0)
    return float(0.5 * r * np.sum(w * ball_area_closed(space, s)))


def _ball_volume_fraction_inverse(space: SpaceForm, R: float, q: np.ndarray) -> np.ndarray:
    """Radii r with V(r)/V(R) = q (q in [0, 1])."""
    if space.K == 0:
        return R * q ** (1.0 / space.dim)
    # monotone table then Newton polish
    grid = np.linspace(0.0, R, 2049)
    dens = ball_area_closed(space, grid)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    total = ball_volume_closed(space, R)
    r = np.interp(q * cum[-1], cum, grid)
    k = math.sqrt(abs(space.K))
    m = space.m
    for _ in range(4):
        if m == 2:
            # closed form of the cumulative volume in 3-D models
            if space.K > 0:
                F = 4 * math.pi * (2 * k * r - np.sin(2 * k * r)) / (4 * k**3)
            else:
                F = 4 * math.pi * (np.sinh(2 * k * r) - 2 * k * r) / (4 * k**3)
        else:
            F = np.array([ball_volume_closed(space, float(x)) for x in np.ravel(r)]).reshape(r.shape)
        dF = ball_area_closed(space, r)
        r = r - (F - q * total) / np.where(dF > 0, dF, 1.0)
        r = np.clip(r, 0.0, R)
    return r


# -- Monte Carlo regions ------------------------------------------------------------

@dataclass(frozen=True)
class PolarChart:
    """Geodesic ball of radius ``radius`` about ``center``."""

    center: np.ndarray
    radius: float
    name: str = field(default="polar", init=False)


@dataclass(frozen=True)
class BoxChart:
    """Axis-aligned box in ambient (Euclidean) coordinates."""

    lo: np.ndarray
    hi: np.ndarray
    name: str = field(default="ambient-box", init=False)


@dataclass(frozen=True)
class RegionSpec:
    """A region given by a vectorised membership predicate inside a bounding chart."""

    space: SpaceForm
    membership: Callable[[np.ndarray], np.ndarray]
    chart: PolarChart | BoxChart

    def chart_volume(self) -> float:
        c = self.chart
        if isinstance(c, BoxChart):
            if not self.space.is_flat:
                raise ChartUnbounded("ambient boxes are only supported in Euclidean space")
            ext = np.asarray(c.hi, float) - np.asarray(c.lo, float)
            if not np.all(np.isfinite(ext)) or np.any(ext < 0):
                raise ChartUnbounded("box chart is not bounded")
            return float(np.prod(ext))
        if not math.isfinite(c.radius) or c.radius < 0:
            raise ChartUnbounded("polar chart radius must be finite")
        return ball_volume_closed(self.space, min(c.radius, self.space.max_radius))


def sample_chart(space: SpaceForm, chart, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniformly distributed (for the model volume) in ``chart``."""
    if isinstance(chart, BoxChart):
        lo = np.asarray(chart.lo, float)
        hi = np.asarray(chart.hi, float)
        return lo + (hi - lo) * rng.random((n, lo.size))
    R = min(chart.radius, space.max_radius)
    dirs = rng.standard_normal((n, space.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = _ball_volume_fraction_inverse(space, R, rng.random(n))
    frame = tangent_frame(space, chart.center)
    w = (dirs @ frame) * r[:, None]
    return exp_map(space, np.broadcast_to(chart.center, w.shape), w)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))


def mc_blocks(samples: int, block: int = MC_BLOCK):
    starts = range(0, samples, block)
    return [(i, min(block, samples - s)) for i, s in enumerate(starts)]


def region_volume_mc(region: RegionSpec, samples: int, seed: int, workers: int = 1):
    """Monte Carlo volume of ``region``; returns (estimate, std_error).

    Samples are drawn in fixed-size blocks, each seeded from (seed, block
    index), so the result does not depend on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    total = region.chart_volume()

    def run(job):
        b, n = job
        pts = sample_chart(region.space, region.chart, n, _block_rng(seed, b))
        return int(np.count_nonzero(region.membership(pts)))

    jobs = mc_blocks(samples)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = sum(pool.map(run, jobs))
    else:
        hits = sum(map(run, jobs))
    p = hits / samples
    est = total * p
    err = total * math.sqrt(p * (1 - p) / samples) if samples > 1 else total
    return est, err
