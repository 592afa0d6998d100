"""Throughput of the compiled filter kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--samples N] [--repeat R]``.
"""
import argparse
import time

import numpy as np

from imuzeros import _kernels_py

try:
    from imuzeros import _kernels as compiled
except ImportError:
    compiled = None


def workload(n, seed=0):
    rng = np.random.default_rng(seed)
    accel = np.tile([0.0, 0.1, 1.0], (n, 1)) + 0.02 * rng.normal(size=(n, 3))
    gyro = 0.5 * rng.normal(size=(n, 3))
    dt = np.full(n, 1e-3)
    dt[0] = 0.0
    return accel, gyro, dt


def time_call(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(mod, n, repeat):
    accel, gyro, dt = workload(n)
    q0 = np.array([1.0, 0.0, 0.0, 0.0])
    q_out, b_out = np.empty((n, 4)), np.empty((n, 3))
    mahony = time_call(lambda: mod.mahony_series(q0, np.zeros(3), accel, gyro, dt, 2.0, 0.1, q_out, b_out), repeat)
    madgwick = time_call(lambda: mod.madgwick_series(q0, accel, gyro, dt, 0.1, True, q_out), repeat)
    return mahony, madgwick


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    results = {"python": bench(_kernels_py, args.samples, args.repeat)}
    if compiled is not None:
        results["cython"] = bench(compiled, args.samples, args.repeat)
    else:
        print("compiled kernels not built; showing the fallback only")

    print(f"{args.samples} samples, best of {args.repeat}")
    print(f"{'backend':<8} {'mahony [s]':>11} {'Msamples/s':>11} {'madgwick [s]':>13} {'Msamples/s':>11}")
    for name, (tm, tg) in results.items():
        print(f"{name:<8} {tm:11.4f} {args.samples / tm / 1e6:11.2f} {tg:13.4f} {args.samples / tg / 1e6:11.2f}")
    if "cython" in results:
        (pm, pg), (cm, cg) = results["python"], results["cython"]
        print(f"speed-up: mahony {pm / cm:.0f}x, madgwick {pg / cg:.0f}x")


if __name__ == "__main__":
    main()
