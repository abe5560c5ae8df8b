import math

import numpy as np
import pytest

from schlafli.spaceform import SpaceForm
from schlafli.surfaces import (
    CATALOG, DimensionMismatch, NotClosed, SurfaceFamily, area, classify_isometric_variation,
    desitter_family, ellipsoid_radial, enclosed_volume, expr_embedded_surface, expr_radial_surface,
    fundamental_forms, geodesic_sphere, kulkarni_nomizu_system, normal_flow_family,
    normal_variation_identities, parallel_surface, perturbed_sphere, plane_patch,
    schlafli_residual_smooth, sphere_family, surface_integral, swept_volume, variation_at,
)

E3, S3, H3, DS = (SpaceForm.euclidean(), SpaceForm.sphere(), SpaceForm.hyperbolic(),
                  SpaceForm.de_sitter())
PTS = [(0.4, 0.3), (1.2, 2.0), (2.5, 5.0)]


@pytest.mark.parametrize("u,v", PTS)
def test_unit_sphere_forms(u, v):
    f = fundamental_forms(geodesic_sphere(E3, 1.0), u, v)
    np.testing.assert_allclose(f.B, -np.eye(2), atol=1e-12)
    assert f.H == pytest.approx(-2.0)
    assert f.K_e == pytest.approx(1.0)
    assert f.S_Sigma == pytest.approx(2.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_hyperbolic_sphere_forms(r):
    f = fundamental_forms(geodesic_sphere(H3, r), 1.0, 1.0)
    assert f.H == pytest.approx(-2 / math.tanh(r), rel=1e-10)
    assert f.S_Sigma == pytest.approx(2 / math.sinh(r)**2, rel=1e-8)


def test_plane_is_totally_geodesic():
    f = fundamental_forms(plane_patch(), 0.2, -0.1)
    np.testing.assert_allclose(f.II, 0, atol=1e-14)
    assert f.H == 0


def test_integrals():
    s = geodesic_sphere(E3, 1.0)
    assert area(s) == pytest.approx(4 * math.pi, rel=1e-12)
    assert surface_integral(s, lambda g: g.H) == pytest.approx(-8 * math.pi, rel=1e-12)
    assert area(geodesic_sphere(H3, 1.0)) == pytest.approx(4 * math.pi * math.sinh(1)**2, rel=1e-12)


def test_enclosed_volume():
    assert enclosed_volume(geodesic_sphere(E3, 1.0))[0] == pytest.approx(4 * math.pi / 3, rel=1e-10)
    assert enclosed_volume(geodesic_sphere(H3, 1.0))[0] == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-10)
    with pytest.raises(NotClosed):
        enclosed_volume(plane_patch())


def test_desitter_band_volume():
    fam = desitter_family(0.0)
    assert swept_volume(fam, 0.0, 1.0) == pytest.approx(2 * math.pi + math.pi * math.sinh(2), rel=1e-10)


def test_sphere_variation_closed_forms():
    var = variation_at(sphere_family(E3, 1.0), 0.0, 1e-4, [1.0], [0.5])
    g = geodesic_sphere(E3, 1.0).geometry(np.array([1.0]), np.array([0.5]))
    np.testing.assert_allclose(var.I_prime[0], 2 * g.I[0], atol=1e-8)
    assert var.H_prime[0] == pytest.approx(2.0, abs=1e-8)
    assert var.V_prime == pytest.approx(4 * math.pi, rel=1e-8)


def test_rigid_rotation_family():
    fam = SurfaceFamily(expr_embedded_surface(E3, "[sin(u)*cos(v+t), sin(u)*sin(v+t), cos(u) + t]"), (-1, 1))
    var = variation_at(fam, 0.0, 1e-4, [0.7, 2.0], [0.1, 4.0])
    assert np.max(np.abs(var.I_prime)) < 1e-8
    assert np.max(np.abs(var.H_prime)) < 1e-8
    assert abs(var.V_prime) < 1e-8


@pytest.mark.parametrize("space,expected", [(E3, 0.0), (H3, -8 * math.pi * math.sinh(1)**2)])
def test_smooth_schlafli_sphere(space, expected):
    res = schlafli_residual_smooth(sphere_family(space, 1.0), 0.0, 1e-3)
    assert abs(res.value) <= 1e-5
    assert res.rhs == pytest.approx(expected, abs=1e-6)
    if space.K == 0:
        assert res.int_H_prime == pytest.approx(8 * math.pi, rel=1e-7)
        assert res.int_half_Ip_II == pytest.approx(-8 * math.pi, rel=1e-7)


def test_smooth_schlafli_desitter():
    res = schlafli_residual_smooth(desitter_family(1.0), 0.0, 1e-3)
    assert abs(res.value) <= 1e-5
    assert res.lhs == pytest.approx(-8 * math.pi * math.cosh(1)**2, rel=1e-7)


@pytest.mark.parametrize("space", [E3, S3, H3], ids=["E3", "S3", "H3"])
def test_smooth_schlafli_ellipsoid_growth(space):
    fam = SurfaceFamily(ellipsoid_radial(space, 0.6, 0.7, 0.9, growth=0.3), (-0.2, 0.2))
    assert abs(schlafli_residual_smooth(fam, 0.0, 1e-3).value) <= 1e-5


@pytest.mark.parametrize("space,f", [(E3, "1"), (H3, "cos(u)"), (S3, "0.3*sin(u)*cos(v)")])
def test_normal_variation_identities(space, f):
    fam = normal_flow_family(geodesic_sphere(space, 0.8), f)
    res = normal_variation_identities(fam, 0.0, 1e-4, [0.5, 1.5, 2.5], [0.2, 3.0, 5.5])
    assert res.I_residual < 1e-7 and res.II_residual < 1e-6


def test_static_family_residuals_zero():
    fam = SurfaceFamily(geodesic_sphere(E3, 1.0), (-1, 1))
    res = normal_variation_identities(fam, 0.0, 1e-4, [1.0], [1.0])
    assert res.I_residual == 0 and res.II_residual == 0


def test_classify_isometric_variation():
    assert classify_isometric_variation(np.diag([1.0, 2, 3]), np.eye(3)).kind == "must_vanish"
    assert classify_isometric_variation(np.zeros((3, 3)), np.eye(3)).kind == "flat"
    assert classify_isometric_variation(np.diag([1.0, 1, 0]), np.diag([1.0, -1, 0])).kind == "low_rank_ok"
    assert classify_isometric_variation(np.diag([1.0, 1, 0]), np.diag([1.0, 1, 0])).kind == "inconsistent"


def test_kulkarni_nomizu_nullspace_trivial_for_rank3():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = kulkarni_nomizu_system(np.diag(rng.uniform(0.5, 3, 3) * rng.choice([-1, 1], 3)))
        s = np.linalg.svd(M, compute_uv=False)
        assert s.min() > 1e-8


@pytest.mark.parametrize("space,eps", [(E3, 0.3), (H3, 0.4), (E3, 0.0)])
def test_parallel_sphere(space, eps):
    p = parallel_surface(geodesic_sphere(space, 1.0), eps)
    assert area(p) == pytest.approx(area(geodesic_sphere(space, 1.0 + eps)), rel=1e-10)


def test_sign_coherence_on_convex_catalog():
    for surf in [geodesic_sphere(S3, 0.8), ellipsoid_radial(H3, 0.5, 0.6, 0.9),
                 perturbed_sphere(E3, 1.0, (0.03,)), expr_radial_surface(E3, "1 + 0.1*cos(u)^2")]:
        U, V = np.meshgrid(np.linspace(0.2, 2.9, 7), np.linspace(0, 6, 7))
        g = surf.geometry(U.ravel(), V.ravel(), 2)
        assert np.all(g.H < 0) and np.all(g.Ke > 0)
        np.testing.assert_allclose(g.III, g.II @ g.B, atol=1e-10)


def test_gauss_bonnet_invariance():
    fam = SurfaceFamily(ellipsoid_radial(E3, 1.0, 1.0, 1.5, growth=0.5), (-0.5, 0.5))
    vals = [surface_integral(fam.at(t), lambda g: g.Ke) for t in (-0.3, 0.0, 0.4)]
    np.testing.assert_allclose(vals, 4 * math.pi, rtol=1e-8)


def test_catalog_factories():
    for name, entry in CATALOG.items():
        assert area(entry["factory"]()) > 0, name


def test_embedded_arity_mismatch():
    with pytest.raises(DimensionMismatch):
        expr_embedded_surface(H3, "[u, v, t]")
