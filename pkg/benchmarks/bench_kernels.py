"""Compare the compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import time

import numpy as np

from shrinker_index import ShootingProblem, angenent_torus, assemble_mode_operator
from shrinker_index._core import HAVE_COMPILED, get_backend
from shrinker_index.profiles import section_mismatch, shoot_closed_orbit
from shrinker_index.spectra import lowest_eigenpairs, sturm_count


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    torus = angenent_torus(2, h=1e-3)
    op = assemble_mode_operator(torus, 0)
    mu = lowest_eigenpairs(op).mu1
    start = np.array([0.0, 0.437, 0.0])
    return {
        "rk4_path (10^4 steps)": lambda b: get_backend(b).rk4_path(*start, 1, 1e-3, 10000, 50.0),
        "first_return (torus orbit)": lambda b: section_mismatch(0.437, 2, 1e-3, backend=b),
        "sturm_count": lambda b: sturm_count(op, mu + 0.1, backend=b),
        "lowest 4 eigenpairs": lambda b: lowest_eigenpairs(op, 4, backend=b),
        "torus shooting": lambda b: shoot_closed_orbit(ShootingProblem(2, (0.3, 2.5), step=1e-3), backend=b),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if not HAVE_COMPILED:
        print("compiled kernels are not built; only the python column is meaningful")
    print(f"{'case':30s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = best_of(lambda: fn("python"), args.repeat)
        tc = best_of(lambda: fn("compiled"), args.repeat) if HAVE_COMPILED else float("nan")
        print(f"{name:30s} {tc:13.4f} {tp:11.4f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
