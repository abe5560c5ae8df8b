import math

import numpy as np
import pytest

from schlafli.polyhedra import (
    CATALOG, DegenerateRidge, Lune, LunePath, Polyhedron, PolyPath, RigidStart, ZeroCurvature,
    cube, dihedral_angle, flex_continuation, infinitesimal_flex_nullity, model_simplex, poly_volume,
    random_tetrahedron, regular_tetrahedron, ridge_data, ridge_measure, schlafli_residual_poly,
    steffen, tetrahedron, total_mean_curvature_poly, volume_by_schlafli,
)
from schlafli.spaceform import SpaceForm, distance, geodesic_eval

E3, S3, H3 = SpaceForm.euclidean(), SpaceForm.sphere(), SpaceForm.hyperbolic()


def test_cube_angles_and_edges():
    c = cube(2.0)
    W, T = ridge_data(c)
    assert len(W) == 12
    np.testing.assert_allclose(T, math.pi / 2, atol=1e-12)
    np.testing.assert_allclose(W, 2.0, atol=1e-12)
    assert dihedral_angle(c, 0) == pytest.approx(math.pi / 2)
    assert ridge_measure(c, 0) == pytest.approx(2.0)


def test_regular_tetrahedron_angle_and_volume():
    t = regular_tetrahedron(1.0)
    _, T = ridge_data(t)
    np.testing.assert_allclose(T, math.acos(1 / 3), atol=1e-12)
    v, err = poly_volume(t, "quadrature")
    assert v == pytest.approx(1 / (6 * math.sqrt(2)), rel=1e-10)


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5, 4.0])
def test_lune(theta):
    lune = Lune(theta)
    assert dihedral_angle(lune, 0) == pytest.approx(theta)
    assert ridge_measure(lune, 0) == pytest.approx(2 * math.pi)
    assert poly_volume(lune)[0] == pytest.approx(math.pi * theta)


def test_lune_rejects_degenerate_angle():
    with pytest.raises(DegenerateRidge):
        Lune(0.0)


def test_hyperbolic_edge_measure():
    o = H3.origin()
    q = geodesic_eval(H3, o, np.array([0.0, 1, 0, 0]), 0.7)
    r = geodesic_eval(H3, o, np.array([0.0, 0, 1, 0]), 0.7)
    s = geodesic_eval(H3, o, np.array([0.0, 0, 0, 1]), 0.7)
    poly = tetrahedron(H3, [o, q, r, s])
    W, _ = ridge_data(poly)
    assert np.any(np.isclose(W, 0.7, atol=1e-12))
    assert np.allclose(sorted(W), sorted(distance(H3, a, b) for a, b in
                                          [(o, q), (o, r), (o, s), (q, r), (q, s), (r, s)]))


def test_h3_simplex_mc_agrees_with_quadrature():
    poly = model_simplex(H3, 1.0)
    vq, eq = poly_volume(poly, "quadrature")
    vm, em = poly_volume(poly, "mc", samples=200_000, seed=11)
    assert abs(vq - vm) <= 4 * em + eq


def test_total_mean_curvature():
    assert total_mean_curvature_poly(cube(1.5)) == pytest.approx(6 * math.pi * 1.5)
    assert total_mean_curvature_poly(regular_tetrahedron()) == pytest.approx(6 * (math.pi - math.acos(1 / 3)))


def test_doubled_polygon_rejected():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    with pytest.raises(Exception):
        total_mean_curvature_poly(Polyhedron(E3, verts, [[0, 1, 2], [0, 2, 1]]))


def test_euclidean_schlafli_vanishes():
    rng = np.random.default_rng(3)
    for _ in range(10):
        path = PolyPath.from_velocities(random_tetrahedron(E3, rng), rng.normal(size=(4, 3)))
        assert abs(schlafli_residual_poly(path, 0.5, 1e-4).value) <= 1e-6


@pytest.mark.parametrize("space", [S3, H3], ids=["S3", "H3"])
def test_curved_schlafli_tetrahedra(space):
    rng = np.random.default_rng(5)
    for _ in range(4):
        start = random_tetrahedron(space, rng)
        vel = rng.normal(scale=0.3, size=start.vertices.shape)
        res = schlafli_residual_poly(PolyPath.from_velocities(start, vel), 0.5, 1e-4)
        assert abs(res.value) <= 1e-3 * (1 + abs(res.rhs))


def test_lune_schlafli_residual():
    path = LunePath(lambda t: 1.0 + t)
    res = schlafli_residual_poly(path, 0.5, 1e-4)
    assert res.lhs == pytest.approx(2 * math.pi, rel=1e-8)
    assert abs(res.value) <= 1e-8


def test_volume_by_schlafli():
    path = LunePath(lambda t: math.pi / 2 + t * math.pi / 2)
    assert volume_by_schlafli(path, math.pi**2 / 2) == pytest.approx(math.pi**2, rel=1e-8)
    const = LunePath(lambda t: 1.0)
    assert volume_by_schlafli(const, 2.0) == pytest.approx(2.0, abs=1e-12)
    target = model_simplex(H3, 0.8)
    v = volume_by_schlafli(PolyPath.shrink(target), 0.0, steps=12, rule="gauss")
    assert v == pytest.approx(poly_volume(target)[0], rel=1e-6)
    with pytest.raises(ZeroCurvature):
        volume_by_schlafli(PolyPath.shrink(regular_tetrahedron()), 0.0)


def test_flex():
    with pytest.raises(RigidStart):
        flex_continuation(regular_tetrahedron(), 5, 0.01)
    assert len(flex_continuation(steffen(), 0, 0.01).states) == 1
    s = steffen()
    assert infinitesimal_flex_nullity(s) > 6
    path = flex_continuation(s, 50, 0.01)
    states = path.states
    assert len(states) >= 50
    L0 = states[0].edge_lengths()
    drift = max(np.max(np.abs(p.edge_lengths() - L0)) for p in states)
    assert drift <= 1e-9
    tmc = [total_mean_curvature_poly(p) for p in states]
    assert (max(tmc) - min(tmc)) <= 1e-6 * abs(tmc[0])
    assert np.max(np.abs(states[-1].vertices - states[0].vertices)) > 1e-2


def test_json_roundtrip_and_catalog():
    for entry in CATALOG.values():
        p = entry["factory"]()
        q = Polyhedron.from_json(p.to_json())
        np.testing.assert_array_equal(p.vertices, q.vertices)
        assert q.space == p.space
