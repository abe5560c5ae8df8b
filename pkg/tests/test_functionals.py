import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schlafli.functionals import (
    WARPED_CATALOG, FoliationSpec, NoMatchingSphere, NonInjectiveSweep, NonPositiveWarp,
    WarpedProductSpec, alexandrov_compare, foliation_identities, ke_proportional_check, p2,
    p2_sphere, p2_variation_residuals, sphere_radius_for_area, umbilic_inequality,
    warped_einstein_check,
)
from schlafli.spaceform import SpaceForm, ball_volume_closed
from schlafli.surfaces import (
    NotNormalGenerator, SurfaceFamily, area, ball_foliation, desitter_family, ellipsoid_radial,
    expr_embedded_surface, geodesic_sphere, normal_flow_family, perturbed_sphere, plane_patch,
    sphere_family,
)

E3, S3, H3 = SpaceForm.euclidean(), SpaceForm.sphere(), SpaceForm.hyperbolic()


def test_p2_closed_forms():
    v = p2(geodesic_sphere(E3, 1.0))
    assert v.int_H == pytest.approx(-8 * math.pi) and v.P2 == pytest.approx(-4 * math.pi)
    r = 0.9
    h = p2(geodesic_sphere(H3, r))
    assert h.int_H == pytest.approx(-8 * math.pi * math.sinh(r) * math.cosh(r), rel=1e-10)
    assert 2 * h.P2 == pytest.approx(h.int_H + 2 * ball_volume_closed(H3, r), rel=1e-10)
    g = p2(geodesic_sphere(S3, math.pi / 2))
    assert g.int_H == pytest.approx(0, abs=1e-10)
    assert g.P2 == pytest.approx(-math.pi**2, rel=1e-10)


@pytest.mark.parametrize("space", [E3, S3, H3], ids=["E3", "S3", "H3"])
def test_p2_sphere_matches_quadrature(space):
    assert p2_sphere(space, 0.7) == pytest.approx(p2(geodesic_sphere(space, 0.7)).P2, rel=1e-10)


def test_p2_variation_sphere_family():
    res = p2_variation_residuals(sphere_family(E3, 1.0))
    assert res.general.lhs == pytest.approx(-4 * math.pi, rel=1e-8)
    assert res.normal.rhs == pytest.approx(-4 * math.pi, rel=1e-8)
    assert res.area.lhs == pytest.approx(8 * math.pi, rel=1e-8)
    for r in (res.general, res.normal, res.area):
        assert abs(r.value) <= 1e-7


def test_p2_variation_static_and_hyperbolic():
    static = p2_variation_residuals(SurfaceFamily(geodesic_sphere(E3, 1.0), (-1, 1)))
    assert static.general.value == 0 and static.normal.value == 0
    res = p2_variation_residuals(normal_flow_family(geodesic_sphere(H3, 0.8), "1 + 0.3*cos(u)"))
    assert abs(res.general.value) <= 1e-6 and abs(res.normal.value) <= 1e-6 and abs(res.area.value) <= 1e-6


def test_p2_variation_tangential_generator():
    fam = SurfaceFamily(ellipsoid_radial(H3, 0.6, 0.7, 0.9, growth=0.3), (-0.2, 0.2))
    with pytest.raises(NotNormalGenerator):
        p2_variation_residuals(fam)
    assert abs(p2_variation_residuals(fam, normal=False).general.value) <= 1e-6


def test_p2_variation_desitter():
    res = p2_variation_residuals(desitter_family(0.5))
    assert abs(res.general.value) <= 1e-6 and abs(res.normal.value) <= 1e-6


@pytest.mark.parametrize("space", [E3, S3, H3], ids=["E3", "S3", "H3"])
def test_sphere_radius_roundtrip(space):
    for r in (0.2, 0.9, 1.4):
        assert sphere_radius_for_area(space, area(geodesic_sphere(space, r))) == pytest.approx(r, rel=1e-10)


def test_no_matching_sphere():
    with pytest.raises(NoMatchingSphere):
        sphere_radius_for_area(S3, 4 * math.pi * 1.01)


def test_alexandrov():
    rep = alexandrov_compare(geodesic_sphere(E3, 1.0))
    assert rep.difference == pytest.approx(0, abs=1e-10) and rep.equality
    ell = alexandrov_compare(ellipsoid_radial(E3, 1.0, 1.0, 2.0))
    assert ell.difference > 1e-3 and not ell.equality


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000), which=st.sampled_from(["E", "S", "H"]))
def test_alexandrov_perturbed(seed, which):
    space = {"E": E3, "S": S3, "H": H3}[which]
    rng = np.random.default_rng(seed)
    rep = alexandrov_compare(perturbed_sphere(space, 0.8, tuple(rng.uniform(-0.03, 0.03, 3))))
    assert rep.difference >= -1e-8


def test_ke_proportional():
    assert ke_proportional_check(geodesic_sphere(H3, 1.0)).verdict == "umbilic"
    assert ke_proportional_check(ellipsoid_radial(E3, 1, 1, 2)).verdict == "not_applicable"
    near = perturbed_sphere(E3, 1.0, (1e-6,))
    assert ke_proportional_check(near, tol=1e-4).verdict == "umbilic"


def test_umbilic_inequality():
    rep = umbilic_inequality(geodesic_sphere(H3, 1.0), [0.5, 1.5], [0.1, 2.0])
    lhs = 2 / math.sinh(1)**2 + 2
    np.testing.assert_allclose(rep.residual, 0, atol=1e-10)
    assert lhs == pytest.approx(2 / math.tanh(1)**2)
    assert rep.equality.all()
    ell = ellipsoid_radial(E3, 1.0, 1.0, 2.0)
    u, v = np.array([0.8]), np.array([0.3])
    rep = umbilic_inequality(ell, u, v)
    g = ell.geometry(u, v, 2)
    k1, k2 = g.principal
    assert rep.residual[0] == pytest.approx((k1[0] - k2[0])**2 / 2, rel=1e-8)
    assert rep.max_h2_residual <= 1e-8
    flat = umbilic_inequality(plane_patch(), [0.1], [0.2])
    assert flat.residual[0] == pytest.approx(0, abs=1e-14)


@pytest.mark.parametrize("space", [E3, S3, H3], ids=["E3", "S3", "H3"])
def test_ball_foliation(space):
    rep = foliation_identities(FoliationSpec(ball_foliation(space, 1.0)))
    for r in (rep.sigma2, rep.trace, rep.scalar):
        assert abs(r.value) <= 1e-5
    assert rep.volume == pytest.approx(ball_volume_closed(space, 1.0), rel=1e-10)
    if space is H3:
        closed = 8 * math.pi - 4 * math.pi * math.sinh(2)
        assert rep.scalar.lhs == pytest.approx(closed, rel=1e-10)
        assert rep.scalar.rhs == pytest.approx(closed, rel=1e-10)


def test_minimal_leaf_sweep_of_sphere_rejected():
    # great spheres rotating about a great circle: minimal leaves, non-injective sweep
    s = expr_embedded_surface(S3, "[cos(t)*cos(u), sin(u)*cos(v), sin(u)*sin(v), sin(t)*cos(u)]")
    fol = FoliationSpec(SurfaceFamily(s, (0, 1)), 0.0, 1.0, degenerate_start=False)
    with pytest.raises(NonInjectiveSweep):
        foliation_identities(fol)
    rep = foliation_identities(fol, check_injective=False)
    assert rep.minimal_leaves and rep.contradiction_margin > 0


@pytest.mark.parametrize("name", sorted(WARPED_CATALOG))
def test_warped_catalog(name):
    r1, r2 = warped_einstein_check(WARPED_CATALOG[name])
    assert r1 <= 1e-10 and r2 <= 1e-10


def test_warped_failures():
    r1, r2 = warped_einstein_check(WarpedProductSpec(1.0, 1.0, "sinh(t)", (0.1, 1.0)))
    assert r1 > 0.1
    with pytest.raises(NonPositiveWarp):
        warped_einstein_check(WarpedProductSpec(1.0, 1.0, "sin(t)", (0.0, 4.0)))
