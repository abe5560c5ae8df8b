# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the Monte Carlo membership kernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, sqrt, M_PI

cnp.import_array()


def inside_halfspaces(points, normals, offsets):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] N = np.ascontiguousarray(normals, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], f = N.shape[0], d = P.shape[1]
    out = np.empty(n, dtype=bool)
    cdef cnp.npy_bool[::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double s
    cdef bint ok
    with nogil:
        for i in range(n):
            ok = True
            for j in range(f):
                s = 0.0
                for k in range(d):
                    s = s + N[j, k] * P[i, k]
                if s > b[j]:
                    ok = False
                    break
            o[i] = ok
    return out


def winding_numbers(points, tris):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, :, ::1] T = np.ascontiguousarray(tris, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], f = T.shape[0]
    out = np.zeros(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz, la, lb, lc, num, den, acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(f):
                ax = T[j, 0, 0] - P[i, 0]; ay = T[j, 0, 1] - P[i, 1]; az = T[j, 0, 2] - P[i, 2]
                bx = T[j, 1, 0] - P[i, 0]; by = T[j, 1, 1] - P[i, 1]; bz = T[j, 1, 2] - P[i, 2]
                cx = T[j, 2, 0] - P[i, 0]; cy = T[j, 2, 1] - P[i, 1]; cz = T[j, 2, 2] - P[i, 2]
                la = sqrt(ax * ax + ay * ay + az * az)
                lb = sqrt(bx * bx + by * by + bz * bz)
                lc = sqrt(cx * cx + cy * cy + cz * cz)
                num = ax * (by * cz - bz * cy) + ay * (bz * cx - bx * cz) + az * (bx * cy - by * cx)
                den = (la * lb * lc + (ax * bx + ay * by + az * bz) * lc
                       + (bx * cx + by * cy + bz * cz) * la + (cx * ax + cy * ay + cz * az) * lb)
                acc = acc + 2.0 * atan2(num, den)
            o[i] = acc / (4.0 * M_PI)
    return out
