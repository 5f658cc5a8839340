#!/usr/bin/env python3
"""Benchmark the compiled stepping kernel against the pure-Python twin.

Runs the standard scenarios on every importable backend, reports wall
times and speedups, and verifies that both backends produce bit-identical
trajectories (same accepted steps, same states, same events).

Usage: python benchmarks/bench_kernel.py [--repeats N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qsirs.integrate import params_tuple
from qsirs.kernel import available_backends
from qsirs.sweep import scenario

CASES = [
    ("case1 principal, t=2000", "case1", {"pi1": 1.0}, 2000.0),
    ("case1 principal, t=500", "case1", {"pi1": 8.0}, 500.0),
    ("case2 burnout, t=1000", "case2", {"mu": 0.5}, 1000.0),
    ("case2 burnout, t=1000", "case2", {"mu": 0.2}, 1000.0),
]


def run(mod, sc, t_max):
    return mod.integrate_raw(params_tuple(sc.params),
                             [float(v) for v in sc.initial.as_array()],
                             1e-9, 1e-12, t_max, 1e-14, 2_000_000, 1e-10,
                             50.0, True)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "c" not in backends:
        print("note: compiled kernel not built; timing the pure kernel only")

    width = max(len(label) for label, *_ in CASES)
    header = f"{'case':<{width}}  {'steps':>8}"
    for name in backends:
        header += f"  {name + ' [s]':>12}"
    if len(backends) > 1:
        header += f"  {'speedup':>8}  {'identical':>9}"
    print(header)
    print("-" * len(header))

    for label, name, overrides, t_max in CASES:
        sc = scenario(name, overrides)
        times = {}
        results = {}
        for bname, mod in backends.items():
            best = float("inf")
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                res = run(mod, sc, t_max)
                best = min(best, time.perf_counter() - t0)
            times[bname] = best
            results[bname] = res
        row = f"{label:<{width}}  {results[next(iter(backends))]['n_accepted']:>8}"
        for bname in backends:
            row += f"  {times[bname]:>12.4f}"
        if len(backends) > 1:
            a, b = results["python"], results["c"]
            same = (a["n_accepted"] == b["n_accepted"]
                    and np.array_equal(np.asarray(a["y"]), np.asarray(b["y"]))
                    and np.array_equal(np.asarray(a["t"]), np.asarray(b["t"]))
                    and a["events"] == b["events"])
            row += f"  {times['python'] / times['c']:>7.1f}x  {str(same):>9}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
