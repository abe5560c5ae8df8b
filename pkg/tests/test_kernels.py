import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schlafli import _kernels_py, kernels
from schlafli.polyhedra import cube

compiled = pytest.importorskip("schlafli._kernels")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_halfspace_parity(seed):
    rng = np.random.default_rng(seed)
    pts, nrm, off = rng.normal(size=(500, 3)), rng.normal(size=(6, 3)), rng.uniform(0, 1, 6)
    np.testing.assert_array_equal(compiled.inside_halfspaces(pts, nrm, off),
                                  _kernels_py.inside_halfspaces(pts, nrm, off))


def _cube_tris():
    c = cube(2.0)
    tris = []
    for f in c.facets:
        for k in range(1, len(f) - 1):
            tris.append(c.vertices[[f[0], f[k], f[k + 1]]])
    return np.array(tris) - 1.0


def test_winding_parity_and_values():
    tris = _cube_tris()
    pts = np.random.default_rng(0).uniform(-2, 2, size=(2000, 3))
    a = compiled.winding_numbers(pts, tris)
    b = _kernels_py.winding_numbers(pts, tris)
    np.testing.assert_allclose(a, b, atol=1e-12)
    inside = np.all(np.abs(pts) < 1, axis=1)
    np.testing.assert_allclose(np.abs(b), inside.astype(float), atol=1e-9)


def test_backend_selection():
    assert kernels.BACKEND == "cython"
    env = dict(os.environ, SCHLAFLI_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from schlafli import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == "python"
