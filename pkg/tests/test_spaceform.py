import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schlafli.spaceform import (
    BoxChart, ModelViolation, NotJoinable, OutOfRange, PolarChart, RegionSpec, SpaceForm,
    ball_volume_closed, check_point, distance, geodesic_eval, region_volume_mc, tangent_frame,
)

E3, S3, H3, DS = SpaceForm.euclidean(), SpaceForm.sphere(), SpaceForm.hyperbolic(), SpaceForm.de_sitter()


def test_scalar_curvature_and_sign():
    assert S3.S == 6.0 and H3.S == -6.0 and E3.S == 0.0
    assert S3.epsilon == 1 and DS.epsilon == -1


@pytest.mark.parametrize("space,p,q,d", [
    (H3, [1, 0, 0, 0], [math.cosh(1), math.sinh(1), 0, 0], 1.0),
    (S3, [1, 0, 0, 0], [-1, 0, 0, 0], math.pi),
    (E3, [0, 0, 0], [3, 4, 0], 5.0),
])
def test_distance_examples(space, p, q, d):
    assert distance(space, np.array(p, float), np.array(q, float)) == pytest.approx(d, abs=1e-12)


@pytest.mark.parametrize("space,p,v,t,out", [
    (E3, [0, 0, 0], [1, 0, 0], 2.0, [2, 0, 0]),
    (S3, [1, 0, 0, 0], [0, 1, 0, 0], math.pi / 2, [0, 1, 0, 0]),
    (H3, [1, 0, 0, 0], [0, 1, 0, 0], 1.0, [math.cosh(1), math.sinh(1), 0, 0]),
])
def test_geodesic_examples(space, p, v, t, out):
    x = geodesic_eval(space, np.array(p, float), np.array(v, float), t)
    np.testing.assert_allclose(x, out, atol=1e-12)


def test_model_violation():
    with pytest.raises(ModelViolation):
        check_point(H3, np.array([2.0, 0, 0, 0]))
    with pytest.raises(ModelViolation):
        check_point(H3, np.array([-1.0, 0, 0, 0]))


def test_desitter_timelike_pair_not_joinable():
    p = np.array([0.0, 1, 0, 0])
    q = np.array([math.sinh(3.0), math.cosh(3.0), 0, 0])
    with pytest.raises(NotJoinable):
        distance(DS, p, -q)


@settings(max_examples=60, deadline=None)
@given(which=st.sampled_from(["E", "S", "H"]), seed=st.integers(0, 2**31), t=st.floats(-3.0, 3.0))
def test_distance_along_geodesic_is_abs_t(which, seed, t):
    space = {"E": E3, "S": S3, "H": H3}[which]
    rng = np.random.default_rng(seed)
    p = geodesic_eval(space, space.origin(), tangent_frame(space, space.origin())[0], rng.uniform(0, 1))
    frame = tangent_frame(space, p)
    w = rng.normal(size=3)
    v = frame.T @ (w / np.linalg.norm(w)) if frame.shape[0] == 3 else None
    x = geodesic_eval(space, p, v, t)
    check_point(space, x)
    assert distance(space, p, x) == pytest.approx(abs(t), abs=1e-9)


@pytest.mark.parametrize("space,r,expected", [
    (E3, 1.0, 4 * math.pi / 3),
    (H3, 1.0, math.pi * (math.sinh(2) - 2)),
    (S3, math.pi, 2 * math.pi**2),
])
def test_ball_volume_closed(space, r, expected):
    assert ball_volume_closed(space, r) == pytest.approx(expected, rel=1e-10)


def test_ball_volume_out_of_range():
    with pytest.raises(OutOfRange):
        ball_volume_closed(S3, 4.0)
    with pytest.raises(OutOfRange):
        ball_volume_closed(E3, -1.0)


@pytest.mark.parametrize("space,r", [(E3, 1.0), (S3, 1.0), (H3, 1.0)])
def test_ball_mc_matches_closed_form(space, r):
    o = space.origin()
    region = RegionSpec(space, lambda x: distance(space, o, x) <= r, PolarChart(o, 1.2 * r))
    est, err = region_volume_mc(region, 200_000, seed=7)
    assert abs(est - ball_volume_closed(space, r)) <= 4 * err


def test_mc_empty_region_and_determinism():
    region = RegionSpec(E3, lambda x: np.zeros(len(x), bool), BoxChart(np.full(3, -1.0), np.ones(3)))
    assert region_volume_mc(region, 1000, seed=1) == (0.0, 0.0)
    ball = RegionSpec(E3, lambda x: np.linalg.norm(x, axis=-1) <= 1, BoxChart(np.full(3, -1.0), np.ones(3)))
    assert region_volume_mc(ball, 50_000, 3) == region_volume_mc(ball, 50_000, 3, workers=4)
