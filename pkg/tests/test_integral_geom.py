import math

import numpy as np
import pytest

from schlafli.integral_geom import (
    ConvexBody, EstimateUnavailable, NotConvex, crofton_lines_mc, crofton_planes_mc,
    eps_volume_direct, p_functionals_curved, steiner_from_curvature, tube_growth_h3,
)
from schlafli.spaceform import SpaceForm, ball_volume_closed
from schlafli.surfaces import ellipsoid_radial, geodesic_sphere, parallel_surface, area, torus

E3, H3 = SpaceForm.euclidean(), SpaceForm.hyperbolic()


@pytest.fixture(scope="module")
def ball():
    return ConvexBody.from_surface(geodesic_sphere(E3, 1.0))


@pytest.fixture(scope="module")
def ellipsoid():
    return ConvexBody.from_surface(ellipsoid_radial(E3, 1.0, 1.0, 2.0))


def test_unit_ball_steiner(ball):
    sd = steiner_from_curvature(ball)
    np.testing.assert_allclose(sd.coefficients, [4 * math.pi / 3, 4 * math.pi, 4 * math.pi, 4 * math.pi / 3],
                               rtol=1e-10)
    assert sd(0.5) == pytest.approx(4 * math.pi / 3 * 1.5**3, rel=1e-10)
    np.testing.assert_allclose(sd.P, [2 * math.pi**2, 4 * math.pi], rtol=1e-10)


def test_steiner_area_derivative_matches_parallel_area(ellipsoid):
    sd = steiner_from_curvature(ellipsoid)
    c = sd.coefficients
    for eps in (0.1, 0.4):
        dV = c[1] + 2 * c[2] * eps + 3 * c[3] * eps**2
        assert area(parallel_surface(ellipsoid.boundary, eps)) == pytest.approx(dV, rel=1e-8)


def test_crofton_ball(ball):
    p1, s1 = crofton_lines_mc(ball, 200_000, seed=1)
    p2, s2 = crofton_planes_mc(ball, 200_000, seed=2)
    assert abs(p1 - 2 * math.pi**2) <= 4 * s1
    assert abs(p2 - 4 * math.pi) <= 4 * s2


def test_crofton_needs_samples(ball):
    with pytest.raises(EstimateUnavailable):
        crofton_lines_mc(ball, 0)
    with pytest.raises(EstimateUnavailable):
        crofton_planes_mc(ball, 0)


@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_eps_neighbourhood_matches_steiner(ellipsoid, eps):
    est, se = eps_volume_direct(ellipsoid, eps, 100_000, seed=3)
    assert abs(est - steiner_from_curvature(ellipsoid)(eps)) <= 4 * se


def test_torus_not_convex():
    with pytest.raises(NotConvex):
        ConvexBody.from_surface(torus())


def test_curved_p_functionals_flat_limit(ball):
    p1, p2 = p_functionals_curved(ball)
    assert p1 == pytest.approx(2 * math.pi**2) and p2 == pytest.approx(4 * math.pi)


def test_tube_growth_sphere():
    body = ConvexBody.from_surface(geodesic_sphere(H3, 1.0))
    assert tube_growth_h3(body, 0.5) == pytest.approx(ball_volume_closed(H3, 1.5), abs=1e-8)
    assert tube_growth_h3(body, 0.0) == pytest.approx(body.V)
    # the historical closed form misses by a wide margin
    assert abs(tube_growth_h3(body, 0.5, "printed") - ball_volume_closed(H3, 1.5)) > 1.0


def test_tube_growth_ellipsoid_against_mc():
    body = ConvexBody.from_surface(ellipsoid_radial(H3, 0.5, 0.6, 0.8))
    est, se = eps_volume_direct(body, 0.3, 60_000, seed=9)
    assert abs(est - tube_growth_h3(body, 0.3)) <= 4 * se


def test_tube_growth_rejects_other_spaces(ball):
    with pytest.raises(ValueError):
        tube_growth_h3(ball, 0.1)
