#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallbacks.

Runs the two sample-rate loops (error-feedback modulator, motor RK4) on
identical inputs through both backends, checks that the results agree, and
prints throughput and speedup.

Usage: python benchmarks/bench_kernels.py [--samples N] [--steps N]
"""

import argparse
import time

import numpy as np

from dsdrive import _kernels_py
from dsdrive.motor import DEFAULT_MOTOR, balanced_drive, _stage_inputs

try:
    from dsdrive import _kernels
except ImportError:
    _kernels = None


def time_call(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_modulator(n):
    fs = 100e3
    t = np.arange(n) / fs
    w = 190.0 * np.sin(2 * np.pi * 50.0 * t)
    # a representative 8th-order FIR NTF tap set
    b = np.array([-0.738, -0.290, -0.023, 0.059, 0.037, -0.001, -0.013, -0.006])
    a = np.empty(0)
    rows = []
    t_py, ref = time_call(_kernels_py.modulator_loop, w, b, a, 320.0, 2,
                          repeat=1)
    rows.append(("python", t_py, n / t_py))
    if _kernels is not None:
        t_cy, out = time_call(_kernels.modulator_loop, w, b, a, 320.0, 2)
        rows.append(("cython", t_cy, n / t_cy))
        assert np.array_equal(out[0], ref[0]) or np.allclose(out[0], ref[0]), \
            "backend outputs disagree"
    return rows


def bench_rk4(steps):
    dt = 1e-5
    params = (DEFAULT_MOTOR.Rs, DEFAULT_MOTOR.Rr, DEFAULT_MOTOR.Ls,
              DEFAULT_MOTOR.Lr, DEFAULT_MOTOR.Lm, float(DEFAULT_MOTOR.P),
              DEFAULT_MOTOR.B, DEFAULT_MOTOR.J)
    drive = balanced_drive(320.0, 50.0)
    load = lambda t: np.zeros(np.shape(t))
    vsd3, vsq3, lam3 = _stage_inputs(drive, load, 0.0, steps, dt, hold=False)
    rows = []

    def run(impl):
        # fresh state each call: the kernel advances it in place
        x = np.zeros(5)
        out = np.empty((1, 5))
        impl.rk4_loop(x, vsd3, vsq3, lam3, dt, params, 1e6, False, steps, out)
        return x

    t_py, ref = time_call(run, _kernels_py, repeat=1)
    rows.append(("python", t_py, steps / t_py))
    if _kernels is not None:
        t_cy, x2 = time_call(run, _kernels)
        rows.append(("cython", t_cy, steps / t_cy))
        assert np.allclose(x2, ref, rtol=1e-12), "backend states disagree"
    return rows


def report(title, unit, rows):
    print(f"\n{title}")
    base = rows[0][1]
    for name, elapsed, rate in rows:
        speedup = base / elapsed
        print(f"  {name:8s} {elapsed * 1e3:10.1f} ms   "
              f"{rate / 1e6:8.2f} M{unit}/s   x{speedup:.1f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1_000_000,
                    help="modulator samples")
    ap.add_argument("--steps", type=int, default=200_000,
                    help="RK4 integration steps")
    args = ap.parse_args()

    if _kernels is None:
        print("compiled extension not built; benchmarking the fallback only")
    report(f"error-feedback modulator, {args.samples} samples", "samples",
           bench_modulator(args.samples))
    report(f"motor RK4, {args.steps} steps", "steps", bench_rk4(args.steps))


if __name__ == "__main__":
    main()
