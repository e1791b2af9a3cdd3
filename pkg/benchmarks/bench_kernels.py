"""Timing comparison of the path-stepping backends.

Runs the same ensemble through the jitted kernel and the numpy
fallback and reports wall time and speedup.  The jitted kernel is
warmed up before timing so compilation is excluded.

Usage: python benchmarks/bench_kernels.py [--samples 2000] [--steps 500]
       [--modes 40] [--workers 4]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qgraph import NoiseModel, simulate, star_analytic
from qgraph._kernels import HAVE_NUMBA, warmup


def run(backend: str, args, eig, noise) -> float:
    z0 = np.zeros(args.modes)
    best = np.inf
    for _ in range(args.repeats):
        t0 = time.perf_counter()
        simulate(
            eig,
            noise,
            z0,
            horizon=1.0,
            num_steps=args.steps,
            num_samples=args.samples,
            seed=7,
            workers=args.workers,
            backend=backend,
        )
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=2000)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--modes", type=int, default=40)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    eig = star_analytic(3, 1.0, num_clusters=args.modes, elements_per_edge=8)
    noise = NoiseModel.from_diagonal(
        eig.graph, {v: 1.0 for v in eig.graph.boundary_vertices}
    )
    k = min(args.modes, eig.num_modes)
    args.modes = k

    print(f"samples={args.samples} steps={args.steps} modes={k} workers={args.workers}")
    t_numpy = run("numpy", args, eig, noise)
    print(f"numpy  backend: {t_numpy * 1e3:9.1f} ms")
    if HAVE_NUMBA:
        warmup("numba")
        t_numba = run("numba", args, eig, noise)
        print(f"numba  backend: {t_numba * 1e3:9.1f} ms")
        print(f"speedup: {t_numpy / t_numba:.2f}x")
    else:
        print("numba not importable; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
