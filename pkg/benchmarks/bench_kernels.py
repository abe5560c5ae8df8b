"""Compare the compiled and pure-Python hot kernels on identical inputs.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from schlafli import _kernels_py
from schlafli.polyhedra import cube, steffen

try:
    from schlafli import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(n, rng):
    c = cube()
    pts = rng.uniform(-0.2, 1.2, (n, 3))
    normals = np.array([c.normals[i] for i in range(len(c.facets))])
    offsets = np.einsum("ij,ij->i", normals, np.array([c.vertices[f[0]] for f in c.facets]))
    s = steffen()
    tris = np.array([[s.vertices[i] for i in f] for f in s.facets])
    spts = rng.uniform(-2.5, 2.5, (n, 3))
    return {
        "inside_halfspaces": ((pts, normals, offsets), "inside_halfspaces"),
        "winding_numbers": ((spts, tris), "winding_numbers"),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}{'max diff':>12}")
    for name, (inputs, fn) in cases(args.points, rng).items():
        py = getattr(_kernels_py, fn)
        t_py = min(timeit.repeat(lambda: py(*inputs), number=1, repeat=args.repeat)) * 1e3
        if _compiled is None:
            print(f"{name:<20}{t_py:>14.2f}{'n/a':>14}{'':>10}{'':>12}")
            continue
        cy = getattr(_compiled, fn)
        t_cy = min(timeit.repeat(lambda: cy(*inputs), number=1, repeat=args.repeat)) * 1e3
        diff = float(np.max(np.abs(np.asarray(py(*inputs), float) - np.asarray(cy(*inputs), float))))
        print(f"{name:<20}{t_py:>14.2f}{t_cy:>14.2f}{t_py / t_cy:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
