#!/usr/bin/env python3
"""Benchmark the stepping kernels: compiled extension vs numpy fallback.

Times the radial and 2-D advance loops on benchmark-sized problems and
reports node-update throughput and the speedup ratio.

    python benchmarks/bench_stepper.py [--quick]
"""
import argparse
import time

import numpy as np

from gcflab import backend


def radial_case(n):
    r = np.linspace(0, 2.0, n)
    f = 0.2 * np.maximum(r - 0.5, 0.0) ** 2 \
        + 1.8 * np.maximum(r - 1.3, 0.0) ** 2
    return r, np.ascontiguousarray(f)


def graph_case(n):
    x = np.linspace(-2, 2, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    rr = np.sqrt(xx ** 2 + yy ** 2)
    f = 0.2 * np.maximum(rr - 0.5, 0.0) ** 2 \
        + 1.8 * np.maximum(rr - 1.3, 0.0) ** 2
    return x, np.ascontiguousarray(f)


def run_radial(mod, n, t_end, alpha):
    r, f = radial_case(n)
    t0 = time.perf_counter()
    _, steps, _, _ = mod.radial_advance(f, r, r[1] - r[0], alpha, 0.4,
                                        0.0, t_end)
    wall = time.perf_counter() - t0
    return wall, steps * n


def run_graph(mod, n, t_end, alpha):
    x, f = graph_case(n)
    dx = x[1] - x[0]
    t0 = time.perf_counter()
    _, steps, _, _ = mod.graph_advance(f, dx, dx, alpha, 0.4, 0.0, t_end)
    wall = time.perf_counter() - t0
    return wall, steps * n * n


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true",
                    help="smaller problems (CI-sized)")
    args = ap.parse_args()
    cases = [
        ("radial n=1025 a=1.0", run_radial, 1025, 0.01 if args.quick else 0.05, 1.0),
        ("radial n=1025 a=0.75", run_radial, 1025, 0.01 if args.quick else 0.05, 0.75),
        ("graph  n=129  a=1.0", run_graph, 129, 0.01 if args.quick else 0.05, 1.0),
        ("graph  n=129  a=0.75", run_graph, 129, 0.01 if args.quick else 0.05, 0.75),
    ]
    names = backend.available()
    print(f"backends: {', '.join(names)}")
    for label, fn, n, t_end, alpha in cases:
        row = {}
        for name in names:
            wall, updates = fn(backend._BACKENDS[name], n, t_end, alpha)
            row[name] = wall
            print(f"{label} [{name:8s}]: {wall:7.3f}s "
                  f"({updates / wall / 1e6:8.1f} Mnode-updates/s)")
        if {"python", "compiled"} <= row.keys():
            print(f"{label} speedup: {row['python'] / row['compiled']:.1f}x")
    if "compiled" not in names:
        print("compiled backend not built; install with a C toolchain to compare")


if __name__ == "__main__":
    main()
