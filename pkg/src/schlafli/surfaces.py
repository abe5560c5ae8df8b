"""Parametrised surfaces in 3-D space forms and de Sitter space.

A chart is a function of the jets ``(u, v, t)`` returning ambient
coordinates.  Every local quantity (I, II, B, H, the normal, the generator
speed f) is computed by truncated Taylor arithmetic on a whole quadrature
grid at once, so second derivatives are exact rather than differenced.

Sign table (used throughout the package):

* ``n`` is the outward normal (future-pointing in de Sitter space) and
  ``eps = <n, n>`` is +1 or -1.
* ``B X = -D_X n``, so ``II_ij = <X_ij, n>`` and a round sphere has H < 0.
* The generator of a family splits as ``X_t = tangential + f n`` with
  ``f = eps <X_t, n>``; then ``V' = int f dA``.
* ``<A, C> = tr(I^-1 A I^-1 C)`` for symmetric 2-tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .exprlang import jet as J
from .exprlang.evaluate import evaluate
from .exprlang.jet import Jet
from .exprlang.parser import ExprProgram, parse
from .spaceform import (
    GeometryError,
    PolarChart,
    RegionSpec,
    SpaceForm,
    distance,
    region_volume_mc,
    tangent_frame,
)


class NotImmersed(GeometryError):
    pass


class NoConvergence(GeometryError):
    pass


class NotClosed(GeometryError):
    pass


class NotStarShaped(GeometryError):
    pass


class NotNormalGenerator(GeometryError):
    pass


class FocalCrossing(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


POLAR_DOMAIN = ((0.0, math.pi), (0.0, 2 * math.pi))
DEFAULT_H = 1e-4


@dataclass(frozen=True, eq=False)
class ParamSurface:
    """Chart-based surface; ``chart(u, v, t)`` returns ambient coordinate jets.

    ``t`` is the family parameter at which the surface is taken, so the same
    object also describes a one-parameter family (see :class:`SurfaceFamily`).
    """

    space: SpaceForm
    chart: Callable
    domain: tuple = POLAR_DOMAIN
    periodic: tuple = (False, True)
    t: float = 0.0
    normal_sign: float = 1.0
    center: np.ndarray | None = None
    name: str = "surface"
    inside: Callable | None = None
    closed: bool = True
    params: dict = field(default_factory=dict)
    radius_fn: Callable | None = None

    def at(self, t: float) -> "ParamSurface":
        return replace(self, t=float(t))

    def geometry(self, u, v, order: int = 2) -> "Geometry":
        return Geometry(self, u, v, order)

    def point(self, u, v) -> np.ndarray:
        X = self.chart(np.asarray(u, float), np.asarray(v, float), np.full(np.shape(u), self.t))
        return np.stack([np.broadcast_to(J.value_of(x), np.shape(u)) for x in X], axis=-1)

    def oriented(self, u0: float | None = None, v0: float | None = None) -> "ParamSurface":
        """Copy with ``normal_sign`` chosen outward (or future-pointing in de Sitter)."""
        (a, b), (c, d) = self.domain
        u0 = 0.5 * (a + b) if u0 is None else u0
        v0 = 0.5 * (c + d) + 0.123 if v0 is None else v0
        g = replace(self, normal_sign=1.0).geometry(np.array([u0]), np.array([v0]), order=1)
        n = g.normal_values[0]
        X = g.X_values[0]
        sp = self.space
        if sp.model == "desitter":
            s = n[0]
        else:
            c0 = self.center if self.center is not None else sp.origin()
            w = X - c0 if sp.is_flat else X - sp.K * sp.inner(c0, X) * c0
            s = sp.inner(n, w) if not sp.is_flat else float(np.dot(n, w))
        return replace(self, normal_sign=1.0 if s >= 0 else -1.0)


@dataclass(frozen=True, eq=False)
class SurfaceFamily:
    """A time-dependent chart with a valid parameter range."""

    surface: ParamSurface
    t_range: tuple = (-1.0, 1.0)

    @property
    def space(self) -> SpaceForm:
        return self.surface.space

    def at(self, t: float) -> ParamSurface:
        lo, hi = self.t_range
        if not lo - 1e-12 <= t <= hi + 1e-12:
            raise ValueError(f"t={t} outside the family range {self.t_range}")
        return self.surface.at(t)


# -- jet vector helpers ---------------------------------------------------------

def _dot(space: SpaceForm, a, b):
    g = space.form
    acc = g[0] * a[0] * b[0]
    for i in range(1, len(a)):
        acc = acc + g[i] * a[i] * b[i]
    return acc


def _det3(r0, r1, r2):
    return (r0[0] * (r1[1] * r2[2] - r1[2] * r2[1])
            - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
            + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]))


def _raw_normal(space: SpaceForm, X, Xu, Xv):
    if space.is_flat:
        return [Xu[1] * Xv[2] - Xu[2] * Xv[1],
                Xu[2] * Xv[0] - Xu[0] * Xv[2],
                Xu[0] * Xv[1] - Xu[1] * Xv[0]]
    out = []
    for i in range(4):
        cols = [k for k in range(4) if k != i]
        minor = _det3([X[k] for k in cols], [Xu[k] for k in cols], [Xv[k] for k in cols])
        out.append(space.form[i] * (-1) ** (i + 1) * minor)
    return out


def _as_jets(X, order, shape):
    out = []
    for x in X:
        if isinstance(x, Jet):
            out.append(x)
        else:
            out.append(Jet.constant(np.broadcast_to(np.asarray(x, float), shape).copy(), order))
    lo = min(x.order for x in out)
    return [x.truncate(lo) for x in out]


def jet_sn(space: SpaceForm, x):
    if space.K == 0:
        return x
    k = math.sqrt(abs(space.K))
    return (J.sin(x * k) if space.K > 0 else J.sinh(x * k)) * (1 / k)


def jet_cs(space: SpaceForm, x):
    if space.K == 0:
        return Jet.constant(np.ones_like(J.value_of(x)), x.order) if isinstance(x, Jet) else 1.0
    k = math.sqrt(abs(space.K))
    return J.cos(x * k) if space.K > 0 else J.cosh(x * k)


class Geometry:
    """Jets of the local invariants of a surface on an array of chart points."""

    def __init__(self, surface: ParamSurface, u, v, order: int = 2):
        self.surface = surface
        sp = self.space = surface.space
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        self.u, self.v = u, v
        U = Jet.variable(u, "u", order)
        V = Jet.variable(v, "v", order)
        T = Jet.variable(np.full(u.shape, surface.t), "t", order)
        X = _as_jets(surface.chart(U, V, T), order, u.shape)
        if len(X) != sp.ambient_dim:
            raise DimensionMismatch(f"chart returned {len(X)} coordinates, expected {sp.ambient_dim}")
        N = self.order = X[0].order
        if N < 1:
            raise ValueError("charts must be differentiable")
        self.X = X
        self.Xu = [x.deriv("u") for x in X]
        self.Xv = [x.deriv("v") for x in X]
        Xl = [x.truncate(N - 1) for x in X]
        self.E = _dot(sp, self.Xu, self.Xu)
        self.F = _dot(sp, self.Xu, self.Xv)
        self.G = _dot(sp, self.Xv, self.Xv)
        det = self.E * self.G - self.F * self.F
        if np.any(det.value <= 0) or np.any(self.E.value <= 0):
            raise NotImmersed("first fundamental form is not positive definite")
        raw = _raw_normal(sp, Xl, self.Xu, self.Xv)
        nn = _dot(sp, raw, raw)
        sgn = np.sign(nn.value)
        if np.any(sgn == 0) or np.any(sgn != sgn.flat[0]):
            raise NotImmersed("normal changes causal type")
        self.eps = float(sgn.flat[0])
        scale = J.sqrt(nn * self.eps) * surface.normal_sign
        self.n = [c / scale for c in raw]

    # -- first-order data -------------------------------------------------
    @property
    def X_values(self):
        return np.stack([x.value for x in self.X], axis=-1)

    @property
    def normal_values(self):
        return np.stack([c.value for c in self.n], axis=-1)

    @property
    def I(self):
        return _mat(self.E.value, self.F.value, self.G.value)

    @property
    def area_element(self):
        return np.sqrt(self.E.value * self.G.value - self.F.value ** 2)

    def generator(self):
        """(f, tangential speed) of the family at the evaluation time."""
        sp = self.space
        Xt = np.stack([x.d(0, 0, 1) for x in self.X], axis=-1)
        n = self.normal_values
        f = self.eps * sp.inner(Xt, n)
        b = np.stack([sp.inner(Xt, _vals(self.Xu)), sp.inner(Xt, _vals(self.Xv))], axis=-1)
        a = np.linalg.solve(self.I, b[..., None])[..., 0]
        tang = np.sqrt(np.maximum(np.einsum("...i,...i->...", a, b), 0.0))
        return f, tang

    # -- second-order data -------------------------------------------------
    def _second(self):
        if hasattr(self, "_II"):
            return
        if self.order < 2:
            raise ValueError("second fundamental form needs order >= 2 jets")
        sp = self.space
        n2 = [c.truncate(self.order - 2) for c in self.n]
        Xuu = [x.deriv("u") for x in self.Xu]
        Xuv = [x.deriv("v") for x in self.Xu]
        Xvv = [x.deriv("v") for x in self.Xv]
        # the quadric correction of the ambient connection is normal to the
        # model, hence orthogonal to n: the flat projection already gives II
        L = _dot(sp, Xuu, n2)
        M = _dot(sp, Xuv, n2)
        Nn = _dot(sp, Xvv, n2)
        o = self.order - 2
        E, F, G = (q.truncate(o) for q in (self.E, self.F, self.G))
        det = E * G - F * F
        self._II = (L, M, Nn)
        self._B = ((G * L - F * M) / det, (G * M - F * Nn) / det,
                   (E * M - F * L) / det, (E * Nn - F * M) / det)

    @property
    def II(self):
        self._second()
        L, M, N = self._II
        return _mat(L.value, M.value, N.value)

    @property
    def B(self):
        self._second()
        b = [x.value for x in self._B]
        return np.stack([np.stack([b[0], b[1]], -1), np.stack([b[2], b[3]], -1)], -2)

    @property
    def H_jet(self):
        self._second()
        return self._B[0] + self._B[3]

    @property
    def Ke_jet(self):
        self._second()
        b = self._B
        return b[0] * b[3] - b[1] * b[2]

    @property
    def H(self):
        return self.H_jet.value

    @property
    def Ke(self):
        return self.Ke_jet.value

    @property
    def H2(self):
        return self.Ke

    @property
    def III(self):
        II = self.II
        return II @ np.linalg.solve(self.I, II)

    @property
    def principal(self):
        """Principal curvatures (k1 <= k2) from H and K_e."""
        H, K = self.H, self.Ke
        disc = np.sqrt(np.maximum(H * H / 4 - K, 0.0))
        return H / 2 - disc, H / 2 + disc

    # -- third-order data ------------------------------------------------------
    def intrinsic_curvature(self):
        """Gauss curvature of I by the Brioschi formula (needs order 3)."""
        if self.order < 3:
            raise ValueError("intrinsic curvature needs order >= 3 jets")
        E, F, G = self.E, self.F, self.G
        e, f, g = E.value, F.value, G.value
        Eu, Ev, Fu, Fv, Gu, Gv = E.d(1, 0), E.d(0, 1), F.d(1, 0), F.d(0, 1), G.d(1, 0), G.d(0, 1)
        Evv, Fuv, Guu = E.d(0, 2), F.d(1, 1), G.d(2, 0)
        a = np.stack([
            np.stack([-Evv / 2 + Fuv - Guu / 2, Eu / 2, Fu - Ev / 2], -1),
            np.stack([Fv - Gu / 2, e, f], -1),
            np.stack([Gv / 2, f, g], -1)], -2)
        z = np.zeros_like(e)
        b = np.stack([
            np.stack([z, Ev / 2, Gu / 2], -1),
            np.stack([Ev / 2, e, f], -1),
            np.stack([Gu / 2, f, g], -1)], -2)
        return (np.linalg.det(a) - np.linalg.det(b)) / (e * g - f * f) ** 2

    @property
    def S_intrinsic(self):
        return 2.0 * self.intrinsic_curvature()

    def christoffel(self):
        """Gamma[k, i, j] of the induced metric."""
        E, F, G = self.E, self.F, self.G
        dI = np.stack([
            _mat(E.d(1, 0), F.d(1, 0), G.d(1, 0)),
            _mat(E.d(0, 1), F.d(0, 1), G.d(0, 1))], axis=-3)  # [..., l, i, j] = d_l I_ij
        Iinv = np.linalg.inv(self.I)
        # Gamma_{ij}^k = 1/2 I^{kl} (d_i I_jl + d_j I_il - d_l I_ij)
        t = (np.einsum("...ijl->...lij", dI) + np.einsum("...jil->...lij", dI) - dI)
        return 0.5 * np.einsum("...kl,...lij->...kij", Iinv, t)

    def speed_jet(self):
        """Jet of f = eps <X_t, n> in (u, v) (its t-part is not meaningful)."""
        Xt = [x.deriv("t") for x in self.X]
        n = [c.truncate(self.order - 1) for c in self.n]
        return _dot(self.space, Xt, n) * self.eps

    def hessian(self, fjet):
        """Hessian of a scalar jet with the Levi-Civita connection of I."""
        grad = np.stack([fjet.d(1, 0), fjet.d(0, 1)], -1)
        second = _mat(fjet.d(2, 0), fjet.d(1, 1), fjet.d(0, 2))
        return second - np.einsum("...kij,...k->...ij", self.christoffel(), grad)

    # -- exact t-derivatives ----------------------------------------------------
    def I_dot(self):
        return _mat(self.E.d(0, 0, 1), self.F.d(0, 0, 1), self.G.d(0, 0, 1))

    def II_dot(self):
        self._second()
        L, M, N = self._II
        return _mat(L.d(0, 0, 1), M.d(0, 0, 1), N.d(0, 0, 1))

    def H_dot(self):
        return self.H_jet.d(0, 0, 1)


def _vals(vec):
    return np.stack([c.value for c in vec], axis=-1)


def _mat(a, b, c):
    a, b, c = np.broadcast_arrays(a, b, c)
    return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)


def tensor_inner(I, A, C):
    """<A, C> = tr(I^-1 A I^-1 C)."""
    Ii = np.linalg.inv(I)
    return np.einsum("...ij,...jk,...kl,...li->...", Ii, A, Ii, C)


# -- pointwise forms ----------------------------------------------------------------

@dataclass(frozen=True)
class FormsAt:
    u: float
    v: float
    I: np.ndarray
    II: np.ndarray
    III: np.ndarray
    B: np.ndarray
    H: float
    H2: float
    K_e: float
    k1: float
    k2: float
    S_Sigma: float
    eps: float


def fundamental_forms(surface: ParamSurface, u: float, v: float) -> FormsAt:
    g = surface.geometry(np.array([u], float), np.array([v], float), order=3)
    k1, k2 = g.principal
    return FormsAt(float(u), float(v), g.I[0], g.II[0], g.III[0], g.B[0], float(g.H[0]),
                   float(g.H2[0]), float(g.Ke[0]), float(k1[0]), float(k2[0]),
                   float(g.S_intrinsic[0]), g.eps)


# -- quadrature ------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def quadrature_grid(domain, n: int, panels: int):
    """Tensor Gauss-Legendre nodes and weights with ``panels`` panels per axis."""
    x, w = _gl(n)
    axes = []
    for lo, hi in domain:
        edges = np.linspace(lo, hi, panels + 1)
        a, b = edges[:-1, None], edges[1:, None]
        nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        weights = (0.5 * (b - a) * w).ravel()
        axes.append((nodes, weights))
    (uu, wu), (vv, wv) = axes
    U, Vg = np.meshgrid(uu, vv, indexing="ij")
    W = np.outer(wu, wv)
    return U, Vg, W


_NAMED = {
    "1": lambda g: np.ones_like(g.u),
    "H": lambda g: g.H,
    "K_e": lambda g: g.Ke,
    "H2": lambda g: g.H2,
    "H^2": lambda g: g.H ** 2,
    "abs_H": lambda g: np.abs(g.H),
}


def _field_fn(field_):
    if isinstance(field_, str):
        if field_ in _NAMED:
            return _NAMED[field_]
        field_ = parse(field_)
    if isinstance(field_, ExprProgram):
        prog = field_
        return lambda g: np.broadcast_to(evaluate(prog, {"u": g.u, "v": g.v, "t": g.surface.t}), g.u.shape)
    return field_


def surface_integral(surface: ParamSurface, field_="1", order: int = 2, n: int = 16,
                     rtol: float = 1e-9, max_level: int = 5, with_error: bool = False):
    """Integral of ``field_`` against the area element, refined until stable.

    ``field_`` may be a quantity name ("1", "H", "K_e", ...), an expression
    in (u, v), or a callable receiving a :class:`Geometry`.
    """
    fn = _field_fn(field_)
    prev = None
    for level in range(max_level + 1):
        U, V, W = quadrature_grid(surface.domain, n, 2**level)
        g = surface.geometry(U, V, order)
        dA = g.area_element * W
        vals = np.asarray(fn(g), float) * dA
        total = float(np.sum(vals))
        scale = float(np.sum(np.abs(vals)))
        floor = 1e-13 * float(np.sum(np.abs(dA)))  # fields at roundoff level count as zero
        if prev is not None and abs(total - prev) <= max(rtol * max(abs(total), scale), floor, 1e-300):
            return (total, abs(total - prev)) if with_error else total
        prev = total
    raise NoConvergence(f"surface integral did not settle (last change {abs(total - prev):.3g})")


def area(surface: ParamSurface) -> float:
    return surface_integral(surface, "1")


# -- volumes ------------------------------------------------------------------------------

def _radial_primitive(space: SpaceForm, rho):
    """int_0^rho sn(r)^2 dr."""
    if space.K == 0:
        return rho**3 / 3
    k = math.sqrt(abs(space.K))
    if space.K > 0:
        return (2 * k * rho - np.sin(2 * k * rho)) / (4 * k**3)
    return (np.sinh(2 * k * rho) - 2 * k * rho) / (4 * k**3)


def _radial_volume(surface: ParamSurface, n: int, panels: int):
    sp = surface.space
    c = surface.center if surface.center is not None else sp.origin()
    U, V, W = quadrature_grid(surface.domain, n, panels)
    g = Geometry(surface, U, V, order=1)
    X = g.X_values
    Xu, Xv = _vals(g.Xu), _vals(g.Xv)
    frame = tangent_frame(sp, c)

    def coords(y, affine):
        if sp.is_flat:
            return (y - c) if affine else y
        w = y - sp.K * sp.inner(c, y)[..., None] * c
        return np.stack([sp.inner(w, e) for e in frame], axis=-1)

    w = coords(X, True)
    wu, wv = coords(Xu, False), coords(Xv, False)
    r = np.linalg.norm(w, axis=-1)
    dens = np.einsum("...i,...i->...", w, np.cross(wu, wv)) / r**3
    big = np.abs(dens) > 1e-9 * np.max(np.abs(dens))
    if np.any(dens[big] > 0) and np.any(dens[big] < 0):
        raise NotStarShaped("surface is not star-shaped about its center")
    rho = np.asarray(distance(sp, np.broadcast_to(c, X.shape), X))
    return abs(float(np.sum(_radial_primitive(sp, rho) * dens * W)))


def enclosed_volume(surface: ParamSurface, method: str = "radial", samples: int = 200_000,
                    seed: int = 0, rtol: float = 1e-11, n: int = 16):
    """Volume bounded by a closed surface, with an error estimate.

    method "radial" integrates the model volume along rays from the
    surface's center (which must see the surface star-shaped); "mc" uses
    the surface's membership predicate with :func:`region_volume_mc`.
    """
    sp = surface.space
    if sp.signature != "riemannian":
        raise NotClosed("use swept_volume for space-like slices of de Sitter space")
    if not surface.closed:
        raise NotClosed("surface does not bound a domain")
    if method == "mc":
        if surface.inside is None:
            raise ValueError("surface has no membership predicate for Monte Carlo")
        c = surface.center if surface.center is not None else sp.origin()
        U, V, _ = quadrature_grid(surface.domain, 12, 4)
        X = surface.point(U, V).reshape(-1, sp.ambient_dim)
        R = float(np.max(distance(sp, np.broadcast_to(c, X.shape), X))) * 1.05
        R = min(R, sp.max_radius)
        return region_volume_mc(RegionSpec(sp, surface.inside, PolarChart(c, R)), samples, seed)
    if method != "radial":
        raise ValueError(f"unknown method {method!r}")
    prev = None
    for level in range(6):
        val = _radial_volume(surface, n, 2**level)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val, abs(val - prev)
        prev = val
    raise NoConvergence("radial volume did not settle")


def swept_volume(family: SurfaceFamily, t0: float, t1: float, nodes: int = 24) -> float:
    """Signed volume swept by the family between t0 and t1: int int f dA dt."""
    x, w = _gl(nodes)
    ts = 0.5 * (t1 - t0) * x + 0.5 * (t0 + t1)
    total = 0.0
    for ti, wi in zip(ts, w):
        s = family.at(float(ti))
        total += wi * surface_integral(s, lambda g: g.generator()[0], order=1)
    return 0.5 * (t1 - t0) * total


# -- variations ------------------------------------------------------------------------------

@dataclass(frozen=True)
class VariationAt:
    u: np.ndarray
    v: np.ndarray
    I_prime: np.ndarray
    II_prime: np.ndarray
    H_prime: np.ndarray
    V_prime: float
    A_prime: float


def _fd(fn, t, h, richardson=True):
    d = (fn(t + h) - fn(t - h)) / (2 * h)
    if not richardson:
        return d
    d2 = (fn(t + h / 2) - fn(t - h / 2)) / h
    return (4 * d2 - d) / 3


def _volume_rate(family: SurfaceFamily, t: float, h: float, richardson: bool = True) -> float:
    sp = family.space
    if sp.signature == "lorentzian":
        d = swept_volume(family, t - h, t + h) / (2 * h)
        if not richardson:
            return d
        d2 = swept_volume(family, t - h / 2, t + h / 2) / h
        return (4 * d2 - d) / 3
    return _fd(lambda s: enclosed_volume(family.at(s))[0], t, h, richardson)


def variation_at(family: SurfaceFamily, t: float, h: float, u, v, richardson: bool = True,
                 with_globals: bool = True) -> VariationAt:
    """Chart-fixed central differences of I, II and H, plus V' and A'."""
    u = np.atleast_1d(np.asarray(u, float))
    v = np.atleast_1d(np.asarray(v, float))

    def forms(s):
        g = family.at(s).geometry(u, v, 2)
        return np.concatenate([g.I.reshape(len(u), -1), g.II.reshape(len(u), -1), g.H[:, None]], 1)

    d = _fd(forms, t, h, richardson)
    Ip = d[:, :4].reshape(-1, 2, 2)
    IIp = d[:, 4:8].reshape(-1, 2, 2)
    Hp = d[:, 8]
    Vp = Ap = float("nan")
    if with_globals:
        Ap = _fd(lambda s: area(family.at(s)), t, h, richardson)
        if family.surface.closed:
            Vp = _volume_rate(family, t, h, richardson)
    return VariationAt(u, v, Ip, IIp, Hp, Vp, Ap)


@dataclass(frozen=True)
class SmoothResidual:
    value: float
    lhs: float
    rhs: float
    int_H_prime: float
    int_half_Ip_II: float
    V_prime: float
    V_prime_flux: float
    error_budget: float
    signature: str

    def ok(self, tol: float) -> bool:
        return abs(self.value) <= tol + self.error_budget


def _rhs_integrands(family: SurfaceFamily, t: float, h: float, n: int, panels: int, richardson: bool):
    surf = family.at(t)
    U, V, W = quadrature_grid(surf.domain, n, panels)

    def forms(s):
        g = family.at(s).geometry(U, V, 2)
        return np.concatenate([g.I.reshape(*U.shape, 4), g.H[..., None]], -1)

    d = _fd(forms, t, h, richardson)
    g = surf.geometry(U, V, 2)
    Ip = d[..., :4].reshape(*U.shape, 2, 2)
    Hp = d[..., 4]
    dA = g.area_element * W
    half = 0.5 * tensor_inner(g.I, Ip, g.II)
    f, _ = g.generator()
    return float(np.sum(Hp * dA)), float(np.sum(half * dA)), float(np.sum(f * dA)), float(np.sum(np.abs(Hp * dA)) + np.sum(np.abs(half * dA)))


def schlafli_residual_smooth(family: SurfaceFamily, t: float = 0.0, h: float = DEFAULT_H,
                             n: int = 16, rtol: float = 1e-10, richardson: bool = True) -> SmoothResidual:
    """LHS - RHS of the smooth volume-variation identity.

    Riemannian: S/(m+1) V' = int (H' + 1/2 <I', II>) dA.
    de Sitter:  -m K V'    = int (H' + 1/2 <I', II>) dA.
    """
    sp = family.space
    prev = None
    for level in range(5):
        a, b, flux, scale = _rhs_integrands(family, t, h, n, 2**level, richardson)
        if prev is not None and abs(a + b - sum(prev[:2])) <= rtol * max(scale, 1.0):
            break
        prev = (a, b, flux)
    else:
        raise NoConvergence("variation integrals did not settle")
    quad_err = abs(a + b - sum(prev[:2]))
    m = sp.m
    if sp.K == 0:
        Vp = flux if family.surface.closed else float("nan")
        lhs = 0.0
    else:
        Vp = _volume_rate(family, t, h, richardson)
        lhs = (sp.S / (m + 1)) * Vp if sp.signature == "riemannian" else -m * sp.K * Vp
    rhs = a + b
    budget = quad_err + 10 * h**4 * max(1.0, abs(rhs))
    return SmoothResidual(lhs - rhs, lhs, rhs, a, b, Vp, flux, budget, sp.signature)


@dataclass(frozen=True)
class NormalResiduals:
    I_residual: float
    II_residual: float
    tangential: float


def normal_variation_identities(family: SurfaceFamily, t: float, h: float, u, v,
                                tangential_tol: float = 1e-10) -> NormalResiduals:
    """Residuals of I' = -2 f II and II' = eps (H_f + K f I) - f III.

    With eps = +1 (Riemannian ambient) the second is the familiar
    II' = H_f - f <R(n, .)n, .> - f III for constant curvature K.
    """
    u = np.atleast_1d(np.asarray(u, float))
    v = np.atleast_1d(np.asarray(v, float))
    surf = family.at(t)
    g = surf.geometry(u, v, 3)
    fj = g.speed_jet()
    f, tang = g.generator()
    if np.max(tang) > tangential_tol:
        raise NotNormalGenerator(f"generator has a tangential part of size {np.max(tang):.3g}")
    var = variation_at(family, t, h, u, v, with_globals=False)
    I, II, III = g.I, g.II, g.III
    r1 = var.I_prime + 2 * f[:, None, None] * II
    K = family.space.K
    target = g.eps * (g.hessian(fj) + K * f[:, None, None] * I) - f[:, None, None] * III
    r2 = var.II_prime - target
    return NormalResiduals(float(np.max(np.abs(r1))), float(np.max(np.abs(r2))), float(np.max(tang)))


# -- bending classification --------------------------------------------------------------------

@dataclass(frozen=True)
class IsometricClass:
    kind: str
    rank: int
    nullity: int
    constraint_residual: float
    singular_values: np.ndarray


def kulkarni_nomizu_system(II) -> np.ndarray:
    """Matrix of the linear map II' -> II ^ II' (Kulkarni-Nomizu product).

    Columns index the independent entries of the symmetric II' (upper
    triangle); rows run over all index quadruples (i, j, k, l).
    """
    II = np.asarray(II, float)
    m = II.shape[0]
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    rows = []
    for i in range(m):
        for j in range(m):
            for k in range(m):
                for l in range(m):
                    row = np.zeros(len(pairs))
                    for c, (a, b) in enumerate(pairs):
                        S = np.zeros((m, m))
                        S[a, b] = S[b, a] = 1.0
                        row[c] = (II[i, k] * S[j, l] + II[j, l] * S[i, k]
                                  - II[i, l] * S[j, k] - II[j, k] * S[i, l])
                    rows.append(row)
    return np.array(rows)


def classify_isometric_variation(II, IIprime, tol: float = 1e-10) -> IsometricClass:
    """First-order admissibility of II' for an isometric variation (I' = 0).

    Keeping the curvature tensor fixed forces II ^ II' = 0.
    """
    II = np.asarray(II, float)
    IIp = np.asarray(IIprime, float)
    if II.ndim != 2 or II.shape[0] != II.shape[1] or IIp.shape != II.shape:
        raise DimensionMismatch("II and II' must be square matrices of the same size")
    II = 0.5 * (II + II.T)
    IIp = 0.5 * (IIp + IIp.T)
    m = II.shape[0]
    w, Q = np.linalg.eigh(II)
    Dp = Q.T @ IIp @ Q
    scale = max(1.0, float(np.max(np.abs(w))))
    rank = int(np.sum(np.abs(w) > tol * scale))
    A = kulkarni_nomizu_system(np.diag(w))
    s = np.linalg.svd(A, compute_uv=False)
    nullity = int(np.sum(s <= 1e-8 * max(s[0], 1e-300))) if s.size else 0
    vec = np.array([Dp[a, b] for a in range(m) for b in range(a, m)])
    res = float(np.max(np.abs(A @ vec))) if A.size else 0.0
    if rank == 0:
        kind = "flat"
    elif m == 2:
        kind = "low_rank_ok"
    elif rank >= 3:
        kind = "must_vanish"
    else:
        ker = np.abs(w) <= tol * scale
        vanishes_on_ker = np.max(np.abs(Dp[ker][:, :]), initial=0.0) <= tol * max(1.0, np.max(np.abs(Dp), initial=0.0))
        kind = "low_rank_ok" if (vanishes_on_ker and res <= tol * scale * max(1.0, np.max(np.abs(Dp)))) else "inconsistent"
    return IsometricClass(kind, rank, nullity, res, s)


# -- surface constructions ------------------------------------------------------------------------------

def _reseed(U, V, T, extra=1):
    o = U.order + extra
    return (Jet.variable(U.value, "u", o), Jet.variable(V.value, "v", o),
            Jet.variable(T.value, "t", o))


def _jet_normal(surface: ParamSurface, U, V, T):
    """Chart coordinates and unit normal as jets of the same order as U."""
    if not isinstance(U, Jet):
        g = Geometry(replace(surface, t=float(np.ravel(T)[0])), np.asarray(U), np.asarray(V), order=1)
        return list(g.X_values.transpose(-1, *range(g.X_values.ndim - 1))), \
            list(g.normal_values.transpose(-1, *range(g.normal_values.ndim - 1)))
    U1, V1, T1 = _reseed(U, V, T)
    X = _as_jets(surface.chart(U1, V1, T1), U1.order, np.shape(U.value))
    sp = surface.space
    Xu = [x.deriv("u") for x in X]
    Xv = [x.deriv("v") for x in X]
    Xl = [x.truncate(X[0].order - 1) for x in X]
    raw = _raw_normal(sp, Xl, Xu, Xv)
    nn = _dot(sp, raw, raw)
    eps = float(np.sign(np.ravel(nn.value)[0]))
    scale = J.sqrt(nn * eps) * surface.normal_sign
    return Xl, [c / scale for c in raw]


def parallel_surface(surface: ParamSurface, eps: float) -> ParamSurface:
    """Surface pushed a geodesic distance ``eps`` along its unit normal."""
    sp = surface.space
    if sp.signature != "riemannian":
        raise ValueError("parallel surfaces are implemented for Riemannian models")
    if eps == 0:
        return surface
    U, V, _ = quadrature_grid(surface.domain, 12, 4)
    g = surface.geometry(U, V, 2)
    k1, k2 = g.principal
    cs, sn = float(sp.cs(eps)), float(sp.sn(eps))
    if np.min(cs - sn * np.maximum(k1, k2) if eps > 0 else cs - sn * np.minimum(k1, k2)) <= 0:
        raise FocalCrossing(f"eps={eps} reaches a focal point of the surface")

    def chart(u, v, t):
        X, n = _jet_normal(surface, u, v, t)
        return [cs * x + sn * c for x, c in zip(X, n)]

    out = replace(surface, chart=chart, name=f"{surface.name}+{eps:g}", inside=None,
                  params={**surface.params, "parallel": eps}, radius_fn=None)
    out.geometry(U, V, 2)  # immersion re-check
    return out


def normal_flow_family(surface: ParamSurface, f, t_range=(-0.5, 0.5)) -> SurfaceFamily:
    """Family X_t = exp_X(t f n): its generator at t = 0 is exactly f n.

    ``f`` is an expression in (u, v) or a callable on jets.
    """
    sp = surface.space
    if isinstance(f, str):
        f = parse(f)
    if isinstance(f, ExprProgram):
        prog = f
        f = lambda u, v: evaluate(prog, {"u": u, "v": v, "t": 0.0})  # noqa: E731

    def chart(u, v, t):
        base_t = Jet.constant(np.zeros_like(J.value_of(t)), t.order) if isinstance(t, Jet) else np.zeros_like(t)
        X, n = _jet_normal(replace(surface, t=0.0), u, v, base_t)
        s = t * f(u, v)
        if sp.signature == "lorentzian":
            k = math.sqrt(sp.K)
            a, b = J.cosh(s * k), J.sinh(s * k) * (1 / k)
        else:
            a, b = jet_cs(sp, s), jet_sn(sp, s)
        return [a * x + b * c for x, c in zip(X, n)]

    fam = replace(surface, chart=chart, name=f"{surface.name}~normal-flow", inside=None, radius_fn=None)
    return SurfaceFamily(fam, t_range)


# -- catalog ----------------------------------------------------------------------------------------------

def direction(u, v):
    """Unit vector with polar angle u and azimuth v."""
    su = J.sin(u)
    return [su * J.cos(v), su * J.sin(v), J.cos(u)]


def _polar_point(space: SpaceForm, rho, omega):
    if space.is_flat:
        return [rho * w for w in omega]
    R = space.radius
    return [jet_cs(space, rho) * R] + [jet_sn(space, rho) * w for w in omega]


def radial_surface(space: SpaceForm, rho: Callable, name: str = "radial", params=None,
                   t: float = 0.0) -> ParamSurface:
    """Star-shaped surface {exp_o(rho(omega) omega)} about the model origin.

    ``rho(u, v, t)`` gives the geodesic radius in the direction with polar
    coordinates (u, v); the surface is taken (and oriented) at time ``t``.
    """
    if space.signature != "riemannian":
        raise ValueError("radial surfaces live in Riemannian models")

    def chart(u, v, t):
        return _polar_point(space, rho(u, v, t), direction(u, v))

    o = space.origin()

    def inside(x, _t=None):
        x = np.asarray(x, float)
        if space.is_flat:
            w = x - o
        else:
            w = x[..., 1:]
        r = np.linalg.norm(w, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        th = np.arccos(np.clip(w[..., 2] / safe, -1, 1))
        ph = np.arctan2(w[..., 1], w[..., 0]) % (2 * math.pi)
        d = np.asarray(distance(space, np.broadcast_to(o, x.shape), x))
        return d <= rho(th, ph, 0.0)

    surf = ParamSurface(space, chart, POLAR_DOMAIN, (False, True), float(t), 1.0, o, name,
                        inside, True, dict(params or {}), rho)
    return surf.oriented()


def geodesic_sphere(space: SpaceForm, r: float, rate: float = 0.0) -> ParamSurface:
    """Geodesic sphere of radius r + rate * t about the model origin."""
    if space.model == "sphere" and not 0 < r < space.max_radius:
        raise ValueError("sphere radius out of range")
    return radial_surface(space, lambda u, v, t: r + rate * t, "sphere", {"r": r, "rate": rate})


def sphere_family(space: SpaceForm, r: float, rate: float = 1.0) -> SurfaceFamily:
    return SurfaceFamily(geodesic_sphere(space, r, rate), (-0.5 * r, 0.5 * r))


def ball_foliation(space: SpaceForm, R: float) -> SurfaceFamily:
    """Concentric geodesic spheres of radius R t, t in [0, 1]."""
    surf = radial_surface(space, lambda u, v, t: R * t, "ball-leaves", {"R": R}, t=1.0)
    return SurfaceFamily(surf, (0.0, 1.0))


def ellipsoid_radial(space: SpaceForm, a: float = 1.0, b: float = 1.0, c: float = 2.0,
                     growth: float = 0.0) -> ParamSurface:
    """Radial graph rho = 1/sqrt(w1^2/a^2 + w2^2/b^2 + w3^2/c^2); an ellipsoid in E^3.

    With ``growth`` the semi-axes scale by (1 + growth * t).
    """
    def rho(u, v, t):
        w = direction(u, v)
        q = w[0] * w[0] / a**2 + w[1] * w[1] / b**2 + w[2] * w[2] / c**2
        return (1 + growth * t) / J.sqrt(q)

    return radial_surface(space, rho, "ellipsoid-radial", {"a": a, "b": b, "c": c, "growth": growth})


def perturbed_sphere(space: SpaceForm, r: float, coeffs, rate: float = 0.0) -> ParamSurface:
    """rho = r (1 + sum c_k Y_k(omega)) + rate t with a few low-degree harmonics."""
    c = list(coeffs) + [0.0] * (6 - len(coeffs))

    def rho(u, v, t):
        x, y, z = direction(u, v)
        harm = (c[0] * x + c[1] * (x * y) + c[2] * (3 * z * z - 1) + c[3] * (x * x - y * y)
                + c[4] * (y * z) + c[5] * (z * (5 * z * z - 3)))
        return r * (1 + harm) + rate * t

    return radial_surface(space, rho, "perturbed-sphere", {"r": r, "coeffs": c[:6], "rate": rate})


def torus(R: float = 2.0, r: float = 0.5) -> ParamSurface:
    sp = SpaceForm.euclidean()

    def chart(u, v, t):
        w = R + r * J.cos(v)
        return [w * J.cos(u), w * J.sin(u), r * J.sin(v)]

    s = ParamSurface(sp, chart, ((0, 2 * math.pi), (0, 2 * math.pi)), (True, True), 0.0, 1.0,
                     np.zeros(3), "torus", None, True, {"R": R, "r": r})
    return s.oriented(0.0, 0.0)


def clifford_torus(alpha: float = math.pi / 4) -> ParamSurface:
    """Flat torus {cos a e^{iu}, sin a e^{iv}} in the unit three-sphere."""
    sp = SpaceForm.sphere()
    ca, sa = math.cos(alpha), math.sin(alpha)

    def chart(u, v, t):
        return [ca * J.cos(u), ca * J.sin(u), sa * J.cos(v), sa * J.sin(v)]

    return ParamSurface(sp, chart, ((0, 2 * math.pi), (0, 2 * math.pi)), (True, True), 0.0, 1.0,
                        sp.origin(), "clifford-torus", None, True, {"alpha": alpha})


def plane_patch() -> ParamSurface:
    sp = SpaceForm.euclidean()

    def chart(u, v, t):
        return [u, v, 0.0 * u]

    return ParamSurface(sp, chart, ((-1, 1), (-1, 1)), (False, False), 0.0, 1.0, None,
                        "plane", None, False, {})


def desitter_slice(s: float, rate: float = 1.0, K: float = 1.0) -> ParamSurface:
    """Space-like round 2-sphere {x0 = sinh(s + rate t)} in de Sitter space."""
    sp = SpaceForm.de_sitter(3, K)
    R = sp.radius

    def chart(u, v, t):
        tau = (s + rate * t) / R
        ch = J.cosh(tau) * R
        return [J.sinh(tau) * R] + [ch * w for w in direction(u, v)]

    surf = ParamSurface(sp, chart, POLAR_DOMAIN, (False, True), 0.0, 1.0, None,
                        "desitter-slice", None, True, {"s": s, "rate": rate})
    return surf.oriented()


def desitter_family(s: float, rate: float = 1.0) -> SurfaceFamily:
    return SurfaceFamily(desitter_slice(s, rate), (-1.0, 1.0))


def expr_radial_surface(space: SpaceForm, source: str, params: dict | None = None) -> ParamSurface:
    """Star-shaped surface whose geodesic radius is an expression in (u, v, t)."""
    params = dict(params or {})
    prog = parse(source, params=params)

    def rho(u, v, t):
        return evaluate(prog, {"u": u, "v": v, "t": t, **params})

    return radial_surface(space, rho, "expr-radial", {"source": source, **params})


def expr_embedded_surface(space: SpaceForm, source: str, domain=POLAR_DOMAIN, periodic=(False, True),
                          params: dict | None = None, closed: bool = True) -> ParamSurface:
    """Surface from a vector expression of ambient coordinates.

    In curved models the vector is pushed radially onto the model quadric,
    so any program with the right causal type defines a valid chart.
    """
    params = dict(params or {})
    prog = parse(source, params=params)
    if not prog.is_vector or prog.arity != space.ambient_dim:
        raise DimensionMismatch(f"need a vector program with {space.ambient_dim} entries")

    def chart(u, v, t):
        X = evaluate(prog, {"u": u, "v": v, "t": t, **params})
        if space.is_flat:
            return X
        q = _dot(space, X, X) if isinstance(X[0], Jet) else sum(g * x * x for g, x in zip(space.form, X))
        s = J.sqrt(q * space.K) if isinstance(q, Jet) else np.sqrt(q * space.K)
        if space.model == "hyperbolic":
            s = s * (1.0 if np.all(J.value_of(X[0]) > 0) else -1.0)
        return [x / s for x in X]

    surf = ParamSurface(space, chart, tuple(map(tuple, domain)), tuple(periodic), 0.0, 1.0, space.origin(),
                        "expr-embedded", None, closed, {"source": source, **params})
    return surf.oriented()


CATALOG = {
    "sphere": {"params": {"K": "curvature", "r": "geodesic radius", "rate": "dr/dt"},
               "factory": lambda K=0.0, r=1.0, rate=0.0: geodesic_sphere(SpaceForm(3, K), r, rate)},
    "ellipsoid-radial": {"params": {"K": "curvature", "a": "axis", "b": "axis", "c": "axis",
                                    "growth": "relative axis growth per unit t"},
                         "factory": lambda K=0.0, a=1.0, b=1.0, c=2.0, growth=0.0:
                         ellipsoid_radial(SpaceForm(3, K), a, b, c, growth)},
    "perturbed-sphere": {"params": {"K": "curvature", "r": "base radius", "coeffs": "harmonic amplitudes",
                                    "rate": "dr/dt"},
                         "factory": lambda K=0.0, r=1.0, coeffs=(0.05,), rate=0.0:
                         perturbed_sphere(SpaceForm(3, K), r, coeffs, rate)},
    "torus": {"params": {"R": "center radius", "r": "tube radius"}, "factory": torus},
    "clifford-torus": {"params": {"alpha": "latitude in S^3"}, "factory": clifford_torus},
    "desitter-slice": {"params": {"s": "time of the slice", "rate": "ds/dt"}, "factory": lambda s=1.0, rate=1.0: desitter_slice(s, rate)},
    "expr-radial": {"params": {"K": "curvature", "source": "radius expression in u, v, t"},
                    "factory": lambda K=0.0, source="1": expr_radial_surface(SpaceForm(3, K), source)},
}
