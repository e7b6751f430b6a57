#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--reps 5]

Times the 3x3x3 convolution (forward and backward) at the layer shapes the
default network actually runs, plus the exact EDT at a few grid sizes, and
prints one table with the speedup of the compiled core over the fallback.
"""

import argparse
import time

import numpy as np

from skullstrip._kernels import _numpy, has_native

if has_native():
    from skullstrip._kernels import _native
else:
    _native = None


def _best_of(fn, reps):
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def bench_conv(reps):
    rows = []
    # (ci, co, n): encoder/decoder shapes of the default 3-level, base-8 net
    shapes = [(1, 8, 32), (8, 8, 32), (8, 16, 16), (16, 16, 16),
              (16, 32, 8), (48, 16, 16), (24, 8, 32)]
    rng = np.random.default_rng(0)
    for ci, co, n in shapes:
        x = rng.standard_normal((ci, n, n, n)).astype(np.float32)
        w = rng.standard_normal((co, ci, 3, 3, 3)).astype(np.float32)
        b = np.zeros(co, dtype=np.float32)
        gy = rng.standard_normal((co, n, n, n)).astype(np.float32)
        for kind, call in (("fwd", lambda impl: impl.conv3d_forward(x, w, b)),
                           ("bwd", lambda impl: impl.conv3d_backward(x, w, gy))):
            call(_numpy)
            t_np = _best_of(lambda: call(_numpy), reps)
            t_nat = None
            if _native is not None:
                call(_native)
                t_nat = _best_of(lambda: call(_native), reps)
            rows.append((f"conv {kind} {ci:>2}->{co:<2} @{n}^3", t_np, t_nat))
    return rows


def bench_edt(reps):
    rows = []
    rng = np.random.default_rng(1)
    for n in (32, 64, 128):
        m = rng.random((n, n, n)) < 0.1
        m.flat[0] = True
        vs = (1.0, 1.0, 1.0)
        _numpy.edt_squared(m, vs)
        t_np = _best_of(lambda: _numpy.edt_squared(m, vs), reps)
        t_nat = None
        if _native is not None:
            _native.edt_squared(m, vs)
            t_nat = _best_of(lambda: _native.edt_squared(m, vs), reps)
        rows.append((f"edt @{n}^3", t_np, t_nat))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()

    if _native is None:
        print("compiled extension not built; timing the NumPy fallback only")
    rows = bench_conv(args.reps) + bench_edt(args.reps)
    print(f"{'kernel':<24} {'numpy':>10} {'native':>10} {'speedup':>8}")
    for name, t_np, t_nat in rows:
        if t_nat is None:
            print(f"{name:<24} {t_np * 1e3:9.2f}ms {'-':>10} {'-':>8}")
        else:
            print(f"{name:<24} {t_np * 1e3:9.2f}ms {t_nat * 1e3:9.2f}ms "
                  f"{t_np / t_nat:7.1f}x")


if __name__ == "__main__":
    main()
