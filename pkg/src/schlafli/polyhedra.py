"""Geodesic polyhedra in three-dimensional space forms.

Facets are oriented consistently and each carries an outward unit normal
in the ambient quadratic form.  Interior dihedral angles are measured in
the tangent space at the ridge midpoint, so the same code handles E^3,
S^3 and H^3 and also non-convex (even self-intersecting) closed surfaces,
where angles live in (0, 2 pi).
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import kernels
from .spaceform import (
    GeometryError,
    PolarChart,
    RegionSpec,
    SpaceForm,
    check_point,
    distance,
    exp_map,
    log_map,
    project,
    region_volume_mc,
)

PLANARITY_TOL = 1e-9
DEFAULT_H = 1e-4


class DegenerateRidge(GeometryError):
    pass


class NotClosed(GeometryError):
    pass


class NonSimplex(GeometryError):
    pass


class ZeroCurvature(GeometryError):
    pass


class RigidStart(GeometryError):
    pass


class ProjectionDiverged(GeometryError):
    pass


@dataclass(frozen=True)
class Ridge:
    vertices: tuple[int, int]
    facets: tuple[int, int]
    angle: float
    measure: float


@dataclass(frozen=True)
class Residual:
    """Outcome of a numerical identity check."""

    value: float
    lhs: float
    rhs: float
    error_budget: float = 0.0

    def ok(self, tol: float) -> bool:
        return abs(self.value) <= tol + self.error_budget


def _orient_facets(facets: list[list[int]]) -> list[list[int]]:
    """Flip facets so that every edge is traversed once in each direction."""
    edge_facets = defaultdict(list)
    for i, f in enumerate(facets):
        for k in range(len(f)):
            a, b = f[k], f[(k + 1) % len(f)]
            edge_facets[frozenset((a, b))].append(i)
    for e, fs in edge_facets.items():
        if len(fs) != 2:
            raise NotClosed(f"edge {sorted(e)} borders {len(fs)} facets")
    out = [list(f) for f in facets]
    seen = [False] * len(out)
    for root in range(len(out)):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            i = queue.popleft()
            f = out[i]
            for k in range(len(f)):
                a, b = f[k], f[(k + 1) % len(f)]
                j = next(x for x in edge_facets[frozenset((a, b))] if x != i)
                g = out[j]
                same = any(g[q] == a and g[(q + 1) % len(g)] == b for q in range(len(g)))
                if seen[j]:
                    if same:
                        raise NotClosed("surface is not orientable")
                    continue
                if same:
                    g.reverse()
                seen[j] = True
                queue.append(j)
    return out


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Closed polyhedral surface with geodesic facets in a 3-D Riemannian space form."""

    space: SpaceForm
    vertices: np.ndarray
    facets: tuple
    auto_orient: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.space.signature != "riemannian" or self.space.dim != 3:
            raise ValueError("polyhedra are supported in E^3, S^3 and H^3 only")
        v = check_point(self.space, np.array(self.vertices, dtype=float), tol=1e-10)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        facets = _orient_facets([list(map(int, f)) for f in self.facets])
        object.__setattr__(self, "facets", tuple(tuple(f) for f in facets))
        self._check_planar()
        if self.auto_orient and self._orientation_sign() < 0:
            object.__setattr__(self, "facets", tuple(tuple(reversed(f)) for f in self.facets))

    # -- geometry of facets ----------------------------------------------
    def _raw_normal(self, f) -> np.ndarray:
        P = self.vertices[list(f)]
        if self.space.is_flat:
            # Newell's method: robust for planar polygons
            n = np.zeros(3)
            for k in range(len(P)):
                a, b = P[k], P[(k + 1) % len(P)]
                n += np.cross(a, b)
            return n
        # the hyperplane through the origin of the ambient space spanned by the facet
        a, b, c = P[0], P[1], P[2]
        M = np.array([a, b, c])
        cof = np.array([(-1) ** i * np.linalg.det(np.delete(M, i, axis=1)) for i in range(4)])
        # raise the index so that <N, y> = -det[y, a, b, c] in the model form
        return -self.space.form * cof

    def _check_planar(self):
        for f in self.facets:
            if len(f) < 3:
                raise NotClosed("facet with fewer than 3 vertices")
            if len(f) == 3:
                continue
            N = self._raw_normal(f)
            P = self.vertices[list(f)]
            scale = np.linalg.norm(N) * max(1.0, np.max(np.abs(P)))
            if self.space.is_flat:
                off = (P - P.mean(axis=0)) @ N
            else:
                off = self.space.inner(P, N)
            if np.max(np.abs(off)) > PLANARITY_TOL * scale:
                raise NotClosed("facet vertices are not co-planar")

    @cached_property
    def normals(self) -> np.ndarray:
        """Unit facet normals (ambient coordinates) with the current orientation."""
        out = []
        for f in self.facets:
            n = self._raw_normal(f)
            n2 = self.space.inner(n, n) if not self.space.is_flat else n @ n
            if n2 <= 0:
                raise DegenerateRidge("degenerate facet")
            out.append(n / math.sqrt(n2))
        return np.array(out)

    def _orientation_sign(self) -> float:
        if self.space.is_flat:
            return 1.0 if self.signed_volume_flat() >= 0 else -1.0
        c = self.center
        N = np.array([self._raw_normal(f) for f in self.facets])
        s = self.space.inner(N, c)
        return 1.0 if np.sum(np.sign(s)) <= 0 else -1.0

    def signed_volume_flat(self) -> float:
        """Signed Euclidean volume (divergence theorem over a fan triangulation)."""
        if not self.space.is_flat:
            raise ValueError("signed volume is only defined in E^3")
        total = 0.0
        for f in self.facets:
            a = self.vertices[f[0]]
            for k in range(1, len(f) - 1):
                total += np.dot(a, np.cross(self.vertices[f[k]], self.vertices[f[k + 1]]))
        return total / 6.0

    @cached_property
    def center(self) -> np.ndarray:
        c = self.vertices.mean(axis=0)
        return c if self.space.is_flat else project(self.space, c)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        es = set()
        for f in self.facets:
            for k in range(len(f)):
                a, b = f[k], f[(k + 1) % len(f)]
                es.add((min(a, b), max(a, b)))
        return tuple(sorted(es))

    @cached_property
    def ridges(self) -> tuple[tuple[tuple[int, int], tuple[int, int]], ...]:
        """(edge, (facet_left, facet_right)) with the edge traversed a->b in the left facet."""
        owner = {}
        for i, f in enumerate(self.facets):
            for k in range(len(f)):
                owner[(f[k], f[(k + 1) % len(f)])] = i
        out = []
        for a, b in self.edges:
            out.append(((a, b), (owner[(a, b)], owner[(b, a)])))
        return tuple(out)

    @property
    def is_simplex(self) -> bool:
        return len(self.vertices) == 4 and len(self.facets) == 4

    @cached_property
    def is_convex(self) -> bool:
        for i, f in enumerate(self.facets):
            s = self._side(self.vertices, i)
            if np.any(s > 1e-9):
                return False
        return True

    def _side(self, x, i):
        n = self.normals[i]
        if self.space.is_flat:
            return (np.asarray(x) - self.vertices[self.facets[i][0]]) @ n
        return self.space.inner(x, n)

    def edge_lengths(self) -> np.ndarray:
        a = self.vertices[[e[0] for e in self.edges]]
        b = self.vertices[[e[1] for e in self.edges]]
        return np.asarray(distance(self.space, a, b))

    def with_vertices(self, vertices) -> "Polyhedron":
        """Same combinatorics and facet orientation, new positions."""
        return Polyhedron(self.space, vertices, self.facets, auto_orient=False)

    def to_json(self) -> dict:
        return {
            "space": {"K": self.space.K, "dim": self.space.dim},
            "vertices": self.vertices.tolist(),
            "facets": [list(f) for f in self.facets],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Polyhedron":
        sp = data.get("space", {})
        space = SpaceForm(int(sp.get("dim", 3)), float(sp.get("K", 0.0)))
        return cls(space, np.array(data["vertices"], float), tuple(map(tuple, data["facets"])))


def _tangent(space: SpaceForm, p, x):
    """Component at p of the ambient vector x tangent to the model."""
    if space.is_flat:
        return x
    return x - space.K * space.inner(p, x) * p


def _facet_centroid(poly: Polyhedron, i: int):
    c = poly.vertices[list(poly.facets[i])].mean(axis=0)
    return c if poly.space.is_flat else project(poly.space, c)


def dihedral_angle(poly, ridge_id: int) -> float:
    """Interior dihedral angle in (0, 2 pi) at ridge ``ridge_id``."""
    if isinstance(poly, Lune):
        return poly.theta
    sp = poly.space
    (a, b), (f1, f2) = poly.ridges[ridge_id]
    A, B = poly.vertices[a], poly.vertices[b]
    p = (A + B) / 2 if sp.is_flat else project(sp, A + B)
    e = _tangent(sp, p, B - A)
    ip = sp.inner if not sp.is_flat else (lambda x, y: float(np.dot(x, y)))
    e = e / math.sqrt(ip(e, e))

    def in_facet(fi):
        w = _tangent(sp, p, _facet_centroid(poly, fi) - p)
        w = w - ip(w, e) * e
        n = math.sqrt(max(ip(w, w), 0.0))
        if n == 0:
            raise DegenerateRidge("facet collapses onto its ridge")
        return w / n

    w1, w2 = in_facet(f1), in_facet(f2)
    N1 = poly.normals[f1]
    theta = math.atan2(-ip(w2, N1), ip(w1, w2)) % (2 * math.pi)
    if min(theta, 2 * math.pi - theta) < 1e-12 or abs(theta - math.pi) < 1e-12:
        raise DegenerateRidge(f"ridge {ridge_id} is flat or folded (angle {theta})")
    return theta


def ridge_measure(poly, ridge_id: int) -> float:
    if isinstance(poly, Lune):
        return poly.ridge_length
    (a, b), _ = poly.ridges[ridge_id]
    w = float(distance(poly.space, poly.vertices[a], poly.vertices[b]))
    if w <= 0:
        raise DegenerateRidge("zero-length ridge")
    return w


def ridge_data(poly) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (W_i, theta_i) over all ridges."""
    if isinstance(poly, Lune):
        return np.array([poly.ridge_length]), np.array([poly.theta])
    n = len(poly.ridges)
    W = np.array([ridge_measure(poly, i) for i in range(n)])
    T = np.array([dihedral_angle(poly, i) for i in range(n)])
    return W, T


def ridge_list(poly) -> list[Ridge]:
    W, T = ridge_data(poly)
    if isinstance(poly, Lune):
        return [Ridge((0, 1), (0, 1), float(T[0]), float(W[0]))]
    return [Ridge(r[0], r[1], float(t), float(w)) for r, t, w in zip(poly.ridges, T, W)]


# -- lunes --------------------------------------------------------------------

@dataclass(frozen=True)
class Lune:
    """Region of S^3 between two half great 2-spheres meeting at angle ``theta``.

    Its single ridge is a great circle; volume is theta/(2 pi) of the sphere.
    """

    theta: float
    K: float = 1.0

    def __post_init__(self):
        if not 0 < self.theta < 2 * math.pi:
            raise DegenerateRidge("lune angle must lie in (0, 2 pi)")
        if self.K <= 0:
            raise ValueError("lunes live in spheres")

    @property
    def space(self) -> SpaceForm:
        return SpaceForm.sphere(3, self.K)

    @property
    def ridge_length(self) -> float:
        return 2 * math.pi / math.sqrt(self.K)

    @property
    def ridges(self):
        return (((0, 1), (0, 1)),)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        ang = np.arctan2(x[..., 3], x[..., 2]) % (2 * math.pi)
        return ang <= self.theta

    def volume(self) -> float:
        return self.theta * math.pi / self.K**1.5


# -- volumes ------------------------------------------------------------------

def _simplex_rule(n: int):
    """Duffy-collapsed tensor Gauss-Legendre rule on the unit 3-simplex."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    a, b, c = np.meshgrid(x, x, x, indexing="ij")
    wa, wb, wc = np.meshgrid(w, w, w, indexing="ij")
    l1 = a
    l2 = (1 - a) * b
    l3 = (1 - a) * (1 - b) * c
    jac = (1 - a) ** 2 * (1 - b)
    lam = np.stack([l1.ravel(), l2.ravel(), l3.ravel()], axis=1)
    return lam, (wa * wb * wc * jac).ravel()


def _simplex_volume_quadrature(poly: Polyhedron, rtol: float = 1e-12):
    sp = poly.space
    V = poly.vertices
    if sp.is_flat:
        vol = abs(np.linalg.det(V[1:] - V[0])) / 6.0
        return vol, 1e-15 * max(vol, 1.0)
    det = abs(np.linalg.det(V))
    prev = None
    for n in (8, 16, 24, 32, 48):
        lam, w = _simplex_rule(n)
        y = V[0] + lam @ (V[1:] - V[0])
        q = sp.inner(y, y)
        if np.any(q * sp.K <= 0):
            raise GeometryError("simplex does not project into the model")
        # |det| / <y,y>^2 is the cone Jacobian of the unit model; rescaling
        # the vertices to the unit model and back gives the |K| power
        val = det * np.sum(w / q**2) * abs(sp.K) ** 0.5
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return float(val), float(abs(val - prev))
        prev = val
    return float(val), float(abs(val - prev))


def poly_volume(poly, method: str = "quadrature", samples: int = 200_000, seed: int = 0):
    """Volume and an error bound.

    method: "quadrature" (simplices, or exact in E^3), "exact" (E^3 signed
    volume by the divergence theorem), or "mc".  In E^3 with a non-convex
    surface "mc" integrates the winding number, so self-intersecting
    surfaces get their generalised (algebraic) volume.
    """
    if isinstance(poly, Lune):
        if method == "mc":
            c = poly.space.origin()
            reg = RegionSpec(poly.space, poly.contains, PolarChart(c, math.pi))
            return region_volume_mc(reg, samples, seed)
        return poly.volume(), 0.0
    if method == "exact":
        if not poly.space.is_flat:
            raise ValueError("exact volumes are only available in E^3")
        return abs(poly.signed_volume_flat()), 1e-15
    if method == "quadrature":
        if poly.space.is_flat:
            return abs(poly.signed_volume_flat()), 1e-15
        if not poly.is_simplex:
            raise NonSimplex("quadrature volumes need a tetrahedron")
        return _simplex_volume_quadrature(poly)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    return _volume_mc(poly, samples, seed)


def _volume_mc(poly: Polyhedron, samples: int, seed: int):
    sp = poly.space
    c = poly.center
    R = float(np.max(distance(sp, np.broadcast_to(c, poly.vertices.shape), poly.vertices))) * 1.02
    if poly.is_convex:
        if sp.is_flat:
            offs = np.array([poly.vertices[f[0]] @ n for f, n in zip(poly.facets, poly.normals)])
            normals = poly.normals
        else:
            normals = poly.normals * sp.form
            offs = np.zeros(len(normals))

        def member(x):
            return kernels.inside_halfspaces(x, normals, offs)

        return region_volume_mc(RegionSpec(sp, member, PolarChart(c, R)), samples, seed)
    if not sp.is_flat:
        raise GeometryError("Monte Carlo volumes of non-convex polyhedra need E^3")
    tris = np.array([[poly.vertices[f[0]], poly.vertices[f[k]], poly.vertices[f[k + 1]]]
                     for f in poly.facets for k in range(1, len(f) - 1)])
    return _winding_mc(tris, c, R, samples, seed)


def _winding_mc(tris, center, R, samples, seed):
    """Integral of the winding number over a ball containing the surface."""
    from .spaceform import _block_rng, mc_blocks, sample_chart

    sp = SpaceForm.euclidean()
    chart = PolarChart(np.asarray(center, float), R)
    vol = 4 / 3 * math.pi * R**3
    s1 = s2 = 0.0
    for b, n in mc_blocks(samples):
        pts = sample_chart(sp, chart, n, _block_rng(seed, b))
        w = np.rint(kernels.winding_numbers(pts, tris))
        s1 += float(np.sum(w))
        s2 += float(np.sum(w * w))
    mean = s1 / samples
    var = max(s2 / samples - mean**2, 0.0)
    return vol * mean, vol * math.sqrt(var / samples)


# -- paths and the polyhedral identity ----------------------------------------

@dataclass(frozen=True)
class PolyPath:
    """t in [0, 1] -> polyhedron with fixed combinatorics."""

    space: SpaceForm
    facets: tuple
    vertex_fn: Callable[[float], np.ndarray] | None = None
    samples: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.vertex_fn is not None:
            # fix one outward orientation from the middle of the path
            mid = Polyhedron(self.space, self.vertex_fn(0.5), self.facets)
            object.__setattr__(self, "facets", mid.facets)

    def __call__(self, t: float):
        if self.vertex_fn is not None:
            return Polyhedron(self.space, self.vertex_fn(t), self.facets, auto_orient=False)
        n = len(self.samples) - 1
        if n == 0:
            return self.samples[0]
        k = min(int(round(t * n)), n)
        return self.samples[k]

    @classmethod
    def from_velocities(cls, start: Polyhedron, velocities) -> "PolyPath":
        """Each vertex follows the geodesic with the given initial tangent velocity."""
        vel = np.asarray(velocities, float)
        sp = start.space
        base = start.vertices.copy()
        if not sp.is_flat:
            vel = np.array([_tangent(sp, p, w) for p, w in zip(base, vel)])
        return cls(sp, start.facets, lambda t: exp_map(sp, base, t * vel))

    @classmethod
    def shrink(cls, target: Polyhedron, center=None) -> "PolyPath":
        """Path contracting to ``center`` at t = 0 and equal to ``target`` at t = 1."""
        sp = target.space
        c = target.center if center is None else np.asarray(center, float)
        logs = log_map(sp, np.broadcast_to(c, target.vertices.shape), target.vertices)
        return cls(sp, target.facets, lambda t: exp_map(sp, np.broadcast_to(c, logs.shape), t * logs))

    @property
    def states(self):
        return list(self.samples)


@dataclass(frozen=True)
class LunePath:
    theta: Callable[[float], float]
    K: float = 1.0

    def __call__(self, t):
        return Lune(self.theta(t), self.K)

    @property
    def space(self):
        return SpaceForm.sphere(3, self.K)


def _angle_rates(path, t: float, h: float, richardson: bool = False) -> np.ndarray:
    lo, hi = t - h, t + h
    if lo < 0 or hi > 1:
        # second-order one-sided difference near the ends
        s = 1.0 if lo < 0 else -1.0
        T0 = ridge_data(path(t))[1]
        T1 = ridge_data(path(t + s * h))[1]
        T2 = ridge_data(path(t + 2 * s * h))[1]
        return s * (-3 * T0 + 4 * T1 - T2) / (2 * h)
    d = (ridge_data(path(hi))[1] - ridge_data(path(lo))[1]) / (2 * h)
    if richardson:
        d2 = (ridge_data(path(t + h / 2))[1] - ridge_data(path(t - h / 2))[1]) / h
        d = (4 * d2 - d) / 3
    return d


def _volume(poly, method, samples, seed):
    return poly_volume(poly, method=method, samples=samples, seed=seed)


def schlafli_residual_poly(path, t: float, h: float = DEFAULT_H, volume_method: str = "quadrature",
                           samples: int = 200_000, seed: int = 0, richardson: bool = False) -> Residual:
    """Residual of m K dV/dt - sum W_i dtheta_i/dt (central differences at step h)."""
    if not (0 <= t - h and t + h <= 1):
        raise ValueError("t +- h must lie in [0, 1]")
    sp = path.space
    m = sp.m
    W, _ = ridge_data(path(t))
    dth = _angle_rates(path, t, h, richardson)
    rhs = float(np.dot(W, dth))
    if sp.K == 0:
        return Residual(-rhs, 0.0, rhs)
    Vp, ep = _volume(path(t + h), volume_method, samples, seed)
    Vm, em = _volume(path(t - h), volume_method, samples, seed)
    dV = (Vp - Vm) / (2 * h)
    lhs = m * sp.K * dV
    budget = abs(m * sp.K) * (ep + em) / (2 * h)
    return Residual(lhs - rhs, lhs, rhs, budget)


def schlafli_integrand(path, t: float, h: float = 1e-5) -> float:
    poly = path(t)
    if isinstance(poly, Polyhedron) and np.max(poly.edge_lengths()) <= 1e-12:
        return 0.0  # collapsed to a point: every W_i vanishes
    W, _ = ridge_data(poly)
    return float(np.dot(W, _angle_rates(path, t, h)))


def volume_by_schlafli(path, v_ref: float, steps: int = 16, rule: str = "simpson", h: float = 1e-5) -> float:
    """V(1) from V(0) = v_ref by integrating sum W_i theta_i' / (m K) over [0, 1].

    rule "simpson" uses composite Simpson with ``steps`` panels (endpoints
    included); rule "gauss" uses ``steps`` Gauss-Legendre nodes and never
    evaluates the endpoints, which is what degenerate starts need.
    """
    sp = path.space
    if sp.K == 0:
        raise ZeroCurvature("volume cannot be recovered from the identity when K = 0")
    m = sp.m
    if rule == "simpson":
        if steps < 2 or steps % 2:
            steps += steps % 2 or 2
        ts = np.linspace(0.0, 1.0, steps + 1)
        w = np.ones(steps + 1)
        w[1:-1:2] = 4
        w[2:-1:2] = 2
        w /= 3 * steps
    elif rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(steps)
        ts, w = 0.5 * (x + 1), 0.5 * w
    else:
        raise ValueError(f"unknown rule {rule!r}")
    g = np.array([schlafli_integrand(path, float(t), h) for t in ts])
    return float(v_ref + np.dot(w, g) / (m * sp.K))


def total_mean_curvature_poly(poly) -> float:
    """sum W_i (pi - theta_i): the polyhedral mean curvature integral."""
    if poly.space.dim != 3:
        raise ValueError("defined for three-dimensional polyhedra")
    W, T = ridge_data(poly)
    return float(np.dot(W, math.pi - T))


# -- flexing ------------------------------------------------------------------

def _edge_system(x, edges, L2):
    P = x.reshape(-1, 3)
    d = P[edges[:, 0]] - P[edges[:, 1]]
    c = np.einsum("ij,ij->i", d, d) - L2
    J = np.zeros((len(edges), P.size))
    rows = np.arange(len(edges))
    for k in range(3):
        J[rows, 3 * edges[:, 0] + k] = 2 * d[:, k]
        J[rows, 3 * edges[:, 1] + k] = -2 * d[:, k]
    return c, J


def _pin_rows(P0, facet):
    """Six linear constraints fixing a vertex, an edge direction and a face plane."""
    i, j, k = facet[:3]
    n = P0.shape[0] * 3
    e = P0[j] - P0[i]
    e /= np.linalg.norm(e)
    nrm = np.cross(P0[j] - P0[i], P0[k] - P0[i])
    nrm /= np.linalg.norm(nrm)
    perp = np.cross(e, nrm)
    rows = []
    for a in range(3):
        r = np.zeros(n)
        r[3 * i + a] = 1
        rows.append(r)
    for d in (nrm, perp):
        r = np.zeros(n)
        r[3 * j:3 * j + 3] = d
        rows.append(r)
    r = np.zeros(n)
    r[3 * k:3 * k + 3] = nrm
    rows.append(r)
    return np.array(rows)


def infinitesimal_flex_nullity(poly: Polyhedron, tol: float = 1e-8) -> int:
    """Dimension of the edge-length Jacobian kernel (6 for a rigid body)."""
    E = np.array(poly.edges)
    _, J = _edge_system(poly.vertices.ravel(), E, 0.0)
    s = np.linalg.svd(J, compute_uv=False)
    s = np.concatenate([s, np.zeros(J.shape[1] - len(s))])
    return int(np.sum(s <= tol * s[0]))


def flex_continuation(start: Polyhedron, steps: int, step_size: float = 1e-2,
                      newton_tol: float = 1e-14, max_iter: int = 30) -> PolyPath:
    """Follow a one-parameter isometric flex by predictor-corrector continuation."""
    if not start.space.is_flat:
        raise ValueError("flex continuation is implemented in E^3")
    E = np.array(start.edges)
    P0 = start.vertices
    L2 = np.sum((P0[E[:, 0]] - P0[E[:, 1]]) ** 2, axis=1)
    pins = _pin_rows(P0, start.facets[0])
    pin_vals = pins @ P0.ravel()
    x = P0.ravel().copy()
    _, J = _edge_system(x, E, L2)
    A = np.vstack([J, pins])
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[1] - int(np.sum(s > 1e-8 * s[0])) == 0:
        raise RigidStart("no infinitesimal flex after pinning rigid motions")
    states = [start]
    tangent = None
    for _ in range(steps):
        _, J = _edge_system(x, E, L2)
        A = np.vstack([J, pins])
        _, s, Vt = np.linalg.svd(A)
        s = np.concatenate([s, np.zeros(A.shape[1] - len(s))])
        kernel = Vt[s <= 1e-8 * s[0]]
        if tangent is None:
            tau = kernel[0]
        else:
            # with several flex directions, stay closest to the previous one
            tau = kernel.T @ (kernel @ tangent)
            tau /= np.linalg.norm(tau)
        tangent = tau
        y = x + step_size * tau
        for _ in range(max_iter):
            c, J = _edge_system(y, E, L2)
            res = np.concatenate([c, pins @ y - pin_vals])
            A = np.vstack([J, pins])
            # drop the flex directions so the correction stays transverse to the path
            dy = np.linalg.lstsq(A, res, rcond=1e-9)[0]
            y = y - dy
            if np.max(np.abs(dy)) <= newton_tol * max(1.0, np.max(np.abs(y))):
                break
        else:
            raise ProjectionDiverged("Gauss-Newton projection did not converge")
        x = y
        states.append(start.with_vertices(x.reshape(-1, 3)))
    return PolyPath(start.space, start.facets, None, tuple(states))


# -- catalog --------------------------------------------------------------------

def cube(a: float = 1.0) -> Polyhedron:
    v = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], float) * a
    f = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    return Polyhedron(SpaceForm.euclidean(), v, tuple(f))


TET_FACETS = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


def regular_tetrahedron(edge: float = 1.0) -> Polyhedron:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    v *= edge / (2 * math.sqrt(2))
    return Polyhedron(SpaceForm.euclidean(), v, TET_FACETS)


def tetrahedron(space: SpaceForm, vertices) -> Polyhedron:
    return Polyhedron(space, np.asarray(vertices, float), TET_FACETS)


def model_simplex(space: SpaceForm, length: float = 1.0) -> Polyhedron:
    """Origin plus the endpoints of the three coordinate geodesics of the given length."""
    o = space.origin()
    pts = [o]
    for i in range(3):
        e = np.zeros(space.ambient_dim)
        e[i + (0 if space.is_flat else 1)] = 1.0
        pts.append(exp_map(space, o, length * e))
    return tetrahedron(space, np.array(pts))


def random_tetrahedron(space: SpaceForm, rng: np.random.Generator, scale: float = 0.6) -> Polyhedron:
    """A well-shaped random tetrahedron of diameter about ``scale`` near the model origin."""
    o = space.origin()
    base = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float) / math.sqrt(3)
    while True:
        pts = base + 0.25 * rng.standard_normal((4, 3))
        pts = scale * (pts - pts.mean(axis=0))
        vol = np.linalg.det(pts[1:] - pts[0]) / 6
        if abs(vol) < 0.04 * scale**3:
            continue
        if space.is_flat:
            return tetrahedron(space, pts)
        w = np.hstack([np.zeros((4, 1)), pts])
        return tetrahedron(space, exp_map(space, np.broadcast_to(o, w.shape), w))


def _bricard_pair(A, B, X):
    """Nine-vertex flexible surface glued from two line-symmetric octahedra."""
    rho = np.array([-1.0, -1.0, 1.0])
    Ap, Bp, Xp = A * rho, B * rho, X * rho
    axis = X - (A + B) / 2
    axis /= np.linalg.norm(axis)

    def sigma(p):
        q = p - X
        return X + 2 * np.dot(q, axis) * axis - q

    V = np.array([A, B, X, Ap, Bp, Xp, sigma(Ap), sigma(Bp), sigma(Xp)])
    tri = [(a, b, c) for a in (0, 3) for b in (1, 4) for c in (2, 5) if (a, b, c) != (0, 1, 2)]
    image = {0: 1, 1: 0, 2: 2, 3: 6, 4: 7, 5: 8}
    F = tri + [tuple(image[i] for i in f) for f in tri]
    return V, tuple(F)


STEFFEN_SEED = (np.array([1.3, 0.2, 0.9]), np.array([-0.4, 1.1, -0.7]), None)


def steffen() -> Polyhedron:
    """Flexible closed surface with 9 vertices, 21 edges and 14 triangles.

    Two copies of a line-symmetric Bricard octahedron share one triangle,
    which is removed from both.  The result flexes with two degrees of
    freedom but is not embedded; volumes are generalised (winding-number)
    volumes, which are still constant along the flex.
    """
    A, B, _ = STEFFEN_SEED
    M = (A + B) / 2
    d = B - A
    w = np.array([0.3, -0.5, 1.6])
    w = w - np.dot(w, d) / np.dot(d, d) * d
    X = M + w
    V, F = _bricard_pair(A, B, X)
    return Polyhedron(SpaceForm.euclidean(), V, F)


CATALOG = {
    "cube": {"params": {"a": "edge length (default 1)"}, "factory": cube},
    "regular-tetrahedron": {"params": {"edge": "edge length (default 1)"}, "factory": regular_tetrahedron},
    "model-simplex": {"params": {"K": "curvature", "length": "leg length"},
                      "factory": lambda K=-1.0, length=1.0: model_simplex(SpaceForm(3, K), length)},
    "steffen": {"params": {}, "factory": steffen},
}


def surface_area_flat(poly: Polyhedron) -> float:
    return float(sum(0.5 * np.linalg.norm(poly._raw_normal(f)) for f in poly.facets))


__all__ = [
    "CATALOG", "DegenerateRidge", "Lune", "LunePath", "NonSimplex", "NotClosed", "PolyPath",
    "Polyhedron", "ProjectionDiverged", "Residual", "Ridge", "RigidStart", "ZeroCurvature",
    "cube", "dihedral_angle", "flex_continuation", "infinitesimal_flex_nullity", "model_simplex",
    "poly_volume", "random_tetrahedron", "regular_tetrahedron", "ridge_data", "ridge_list",
    "ridge_measure", "schlafli_integrand", "schlafli_residual_poly", "steffen", "tetrahedron",
    "total_mean_curvature_poly", "volume_by_schlafli",
]

