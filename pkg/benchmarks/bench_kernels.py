"""Benchmark the compiled per-mode kernels against the numpy fallback.

Times the raw kernels at several mode counts and the end-to-end weighted
solve on a masked 64x64 image, switching the backend in process.

    python benchmarks/bench_kernels.py [--reps 300]
"""

import argparse
import time

import numpy as np

import masolver as ms
from masolver import kernels
from masolver.kernels import _fallback

try:
    from masolver.kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(impl, d, reps, rng):
    r = d // 2
    zm = rng.standard_normal(d)
    zy = rng.standard_normal(d)
    s = rng.uniform(0.1, 1.0, r)
    out = np.empty(d)
    lam = np.empty(d)
    gam = np.empty(d)
    rows = {}
    rows["mas_combine"] = best_of(
        lambda: impl.mas_combine(zm, zy, s, 0.3, 0.2, 1e-12, out), reps
    )
    rows["budget_modes"] = best_of(
        lambda: impl.budget_modes(s, d, 0.3, 0.2, 0.8, 0.1, 0.05, 1e-12, lam, gam), reps
    )
    rows["budget_combine"] = best_of(
        lambda: impl.budget_combine(zm, zy, s, 0.3, 0.2, 1e-12, lam, out), reps
    )
    return rows


def bench_solve(impl, reps, rng):
    """Full mas_posterior_mean on a 30%-masked 64x64 image (d = 4096)."""
    shape = (1, 64, 64)
    op = ms.build_mask(shape, ms.random_mask(shape, 0.3, rng))
    m0t = rng.standard_normal(op.in_dim)
    y = rng.standard_normal(op.out_dim)
    w = ms.MasWeights(0.3, 0.2)
    saved = kernels.mas_combine
    kernels.mas_combine = impl.mas_combine
    try:
        return best_of(lambda: ms.mas_posterior_mean(op, m0t, y, w), reps)
    finally:
        kernels.mas_combine = saved


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=300)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    impls = [("numpy", _fallback)]
    if _fast is not None:
        impls.append(("cython", _fast))
    else:
        print("compiled kernels not built; showing the fallback only")

    print(f"{'kernel':<16}{'d':>8}" + "".join(f"{name:>14}" for name, _ in impls)
          + ("      speedup" if len(impls) == 2 else ""))
    for d in (1024, 4096, 16384, 65536):
        results = {name: bench_kernels(impl, d, args.reps, rng) for name, impl in impls}
        for kernel in ("mas_combine", "budget_modes", "budget_combine"):
            row = f"{kernel:<16}{d:>8}"
            for name, _ in impls:
                row += f"{results[name][kernel] * 1e6:>12.1f}us"
            if len(impls) == 2:
                row += f"{results['numpy'][kernel] / results['cython'][kernel]:>11.1f}x"
            print(row)

    print()
    solve = {name: bench_solve(impl, max(args.reps // 3, 20), rng) for name, impl in impls}
    row = f"{'full solve':<16}{4096:>8}"
    for name, _ in impls:
        row += f"{solve[name] * 1e6:>12.1f}us"
    if len(impls) == 2:
        row += f"{solve['numpy'] / solve['cython']:>11.1f}x"
    print(row)


if __name__ == "__main__":
    main()
