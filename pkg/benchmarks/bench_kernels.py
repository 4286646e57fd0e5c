#!/usr/bin/env python3
"""Benchmark the compiled kernel lane against the pure-Python twin.

The two lanes produce bit-identical output (see tests/test_lane_parity),
so this is a pure speed comparison of the hot entry points: spectral
sampling (draws + QL eigenvalues), batch QL on external matrices, and
the diffusion integrators.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from loggas.kernels import available_lanes


def timeit(fn, min_time=0.2):
    # one warmup call, then repeat until the budget is spent
    fn()
    n = 0
    t0 = time.perf_counter()
    while True:
        fn()
        n += 1
        elapsed = time.perf_counter() - t0
        if elapsed >= min_time and n >= 2:
            return elapsed / n


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads")
    args = parser.parse_args()
    scale = 0.2 if args.quick else 1.0

    lanes = available_lanes()
    if "compiled" not in lanes:
        print("compiled lane unavailable; nothing to compare")
    print(f"lanes present: {', '.join(sorted(lanes))}\n")

    rng = np.random.default_rng(0)
    x0 = np.sort(rng.normal(size=(max(1, int(50 * scale)), 8)),
                 axis=1)[:, ::-1].copy()
    d_batch = rng.normal(size=(max(1, int(400 * scale)), 24))
    e_batch = np.abs(rng.normal(size=(d_batch.shape[0], 23))) + 1e-3

    cases = [
        ("spectra n=8",
         lambda lane: lane.sample_spectra(8, 2.0, max(1, int(2000 * scale)),
                                          1, 0)),
        ("spectra n=32",
         lambda lane: lane.sample_spectra(32, 2.0, max(1, int(400 * scale)),
                                          1, 0)),
        ("QL batch n=24",
         lambda lane: lane.tridiag_eigvals_batch(d_batch, e_batch)),
        ("diffusion paths",
         lambda lane: lane.dou_paths(x0, 2.0, 8.0, 1e-3,
                                     max(10, int(500 * scale)), 100, 3, 0)),
        ("coupled pairs",
         lambda lane: lane.dou_coupled(x0, 0.5 * x0, 2.0, 8.0, 1e-3,
                                       max(10, int(500 * scale)), 100, 3, 0)),
        ("scalar draws",
         lambda lane: _scalar_draws(lane, max(100, int(20000 * scale)))),
    ]

    header = f"{'case':<18}" + "".join(f"{name:>14}" for name in sorted(lanes))
    if len(lanes) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, fn in cases:
        times = {}
        for lane_name in sorted(lanes):
            times[lane_name] = timeit(lambda: fn(lanes[lane_name]))
        row = f"{name:<18}" + "".join(f"{times[k] * 1e3:>12.2f}ms"
                                      for k in sorted(times))
        if len(times) == 2:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)


def _scalar_draws(lane, k):
    core = lane.RngCore(7, 0)
    for _ in range(k):
        core.normal()
        core.gamma(1.7)
        core.chi(2.5)


if __name__ == "__main__":
    main()
