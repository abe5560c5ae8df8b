"""Reference numpy implementations of the hot loops.

These are the import-time fallback when the compiled extension is not
available (or SCHLAFLI_PURE_PYTHON=1 is set); both versions must agree
bit-for-bit on the boolean kernels and to rounding on the winding numbers.
"""

import numpy as np

_CHUNK = 4096


def inside_halfspaces(points, normals, offsets):
    """Mask of points p with ``normals @ p <= offsets`` for every row."""
    points = np.ascontiguousarray(points, dtype=float)
    normals = np.ascontiguousarray(normals, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=float)
    out = np.empty(len(points), dtype=bool)
    for s in range(0, len(points), _CHUNK):
        blk = points[s:s + _CHUNK]
        out[s:s + _CHUNK] = np.all(blk @ normals.T <= offsets, axis=1)
    return out


def winding_numbers(points, tris):
    """Winding number of a closed oriented triangle mesh about each point.

    ``tris`` has shape (F, 3, 3).  Uses the signed solid angle of each
    triangle (Van Oosterom and Strackee), summed and divided by 4 pi.
    """
    points = np.ascontiguousarray(points, dtype=float)
    tris = np.ascontiguousarray(tris, dtype=float)
    total = np.zeros(len(points))
    for s in range(0, len(points), _CHUNK):
        p = points[s:s + _CHUNK, None, :]
        a = tris[None, :, 0, :] - p
        b = tris[None, :, 1, :] - p
        c = tris[None, :, 2, :] - p
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        num = np.einsum("...i,...i->...", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("...i,...i->...", a, b) * lc
               + np.einsum("...i,...i->...", b, c) * la
               + np.einsum("...i,...i->...", c, a) * lb)
        total[s:s + _CHUNK] = np.sum(2.0 * np.arctan2(num, den), axis=1)
    return total / (4.0 * np.pi)
