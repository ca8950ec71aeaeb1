#!/usr/bin/env python3
"""Throughput comparison: compiled episode kernels vs the pure-Python lane.

Run:  python3 benchmarks/bench_kernels.py [--horizon N] [--python-horizon N]
"""
import argparse
import time

import numpy as np

import banditsim as bs


CONFIGS = [
    ("vanilla_ts_gaussian", {}),
    ("vanilla_ts_beta", {}),
    ("ts_ma", {"alpha": 0.8}),
    ("ts_td", {"alpha": 0.8}),
    ("epsilon_ts", {"epsilon": 0.05}),
    ("expts_plus", {}),
    ("kl_ucb_pp", {}),
]


def time_lane(instance, algo, params, horizon, use_kernel, repeats=3):
    cps = bs.checkpoint_grid(horizon)
    best = float("inf")
    for r in range(repeats):
        policy = bs.make_policy(algo, **params)
        rng = bs.RngStream(1234).split(0, r)
        t0 = time.perf_counter()
        bs.run_episode(instance, policy, horizon, rng, cps, use_kernel=use_kernel)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=int, default=100_000,
                    help="rounds per episode for the compiled lane")
    ap.add_argument("--python-horizon", type=int, default=5_000,
                    help="rounds per episode for the pure-Python lane")
    args = ap.parse_args()

    if not bs.KERNELS_AVAILABLE:
        print("compiled kernels are not available; benchmarking the fallback only")

    instance = bs.make_instance([0.9] + [0.8] * 19)
    print(f"{'policy':28s} {'kernel rounds/s':>16s} {'python rounds/s':>16s} {'speedup':>9s}")
    for algo, params in CONFIGS:
        py = time_lane(instance, algo, params, args.python_horizon, use_kernel=False)
        py_rate = args.python_horizon / py
        if bs.KERNELS_AVAILABLE:
            cy = time_lane(instance, algo, params, args.horizon, use_kernel=True)
            cy_rate = args.horizon / cy
            print(f"{algo + str(params):28s} {cy_rate:16.0f} {py_rate:16.0f} {cy_rate / py_rate:8.1f}x")
        else:
            print(f"{algo + str(params):28s} {'-':>16s} {py_rate:16.0f} {'-':>9s}")


if __name__ == "__main__":
    main()
