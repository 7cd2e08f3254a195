"""Compiled vs pure-Python kernels on square boxes.

    python3 benchmarks/bench_kernels.py [--radii 4,8,16] [--repeat 3]

The pure-Python numbers use ``kernel.py_func``, which is the same source the
``FPPLAB_NO_NUMBA=1`` fallback runs.
"""

import argparse
import time

import numpy as np

from fpplab import kernels
from fpplab._accel import USE_NUMBA
from fpplab.lattice import Box
from fpplab.paths import WeightField
from fpplab.seeding import stream
from fpplab.weights import Exponential


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--radii", default="4,8,16")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled by FPPLAB_NO_NUMBA; both columns run the same Python code")
    print(f"{'radius':>6} {'vertices':>9} {'kernel':>18} {'compiled ms':>12} {'python ms':>10} {'speedup':>8}")
    for radius in (int(r) for r in args.radii.split(",")):
        box = Box.cube(radius)
        f = WeightField.iid(box, Exponential(1.0), stream(0, "bench", radius))
        allowed = np.ones(box.n_vertices, dtype=np.bool_)
        src, dst = box.flat((0, 0)), box.flat((radius, 0))
        cases = {
            "dijkstra": lambda k: k(f.weights, box.shape_arr, box.strides_arr, allowed, src, dst, np.inf, 1e-9),
            "open_cluster_roots": lambda k: k(f.weights, box.shape_arr, box.strides_arr, 0.7),
        }
        for name, call in cases.items():
            k = getattr(kernels, name)
            call(k)  # compile outside the timing
            fast = best_of(lambda: call(k), args.repeat)
            slow = best_of(lambda: call(k.py_func), args.repeat)
            print(f"{radius:>6} {box.n_vertices:>9} {name:>18} {fast * 1e3:>12.3f} {slow * 1e3:>10.2f} {slow / fast:>8.1f}")


if __name__ == "__main__":
    main()
