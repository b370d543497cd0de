"""Compare the numba and pure-numpy NUFFT kernels.

Usage::

    python benchmarks/bench_kernels.py [--n 256] [--samples 200000] [--repeat 3]

Prints the best-of-``repeat`` wall time of the interpolation (forward) and
spreading (adjoint) kernels for both backends and checks that they agree.
"""
import argparse
import time

import numpy as np

from sarsbl import _kernels


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=256, help="image side; the fine grid is 2n")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--width", type=int, default=12)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    nf = 2 * args.n
    ux = rng.uniform(-nf / 2, nf / 2, args.samples)
    uy = rng.uniform(-nf / 2, nf / 2, args.samples)
    G = rng.standard_normal((nf, nf)) + 1j * rng.standard_normal((nf, nf))
    c = rng.standard_normal(args.samples) + 1j * rng.standard_normal(args.samples)
    w, beta = args.width, 2.30 * args.width

    print(f"fine grid {nf}x{nf}, {args.samples} samples, kernel width {w}")
    rows = []
    backends = [("numpy", _kernels.interp_numpy, _kernels.spread_numpy)]
    if _kernels.interp_numba is not None:
        # compile outside the timed region
        _kernels.interp_numba(G, ux[:10], uy[:10], w, beta)
        _kernels.spread_numba(c[:10], ux[:10], uy[:10], nf, nf, w, beta)
        backends.insert(0, ("numba", _kernels.interp_numba, _kernels.spread_numba))
    results = {}
    for name, interp, spread in backends:
        ti = best_of(lambda: interp(G, ux, uy, w, beta), args.repeat)
        ts = best_of(lambda: spread(c, ux, uy, nf, nf, w, beta), args.repeat)
        results[name] = (interp(G, ux, uy, w, beta), spread(c, ux, uy, nf, nf, w, beta))
        rows.append((name, ti, ts))
    print(f"{'backend':<8} {'interp [s]':>11} {'spread [s]':>11}")
    for name, ti, ts in rows:
        print(f"{name:<8} {ti:11.4f} {ts:11.4f}")
    if len(rows) == 2:
        (_, ti_nb, ts_nb), (_, ti_np, ts_np) = rows
        print(f"speedup  {ti_np / ti_nb:10.1f}x {ts_np / ts_nb:10.1f}x")
        a, b = results["numba"], results["numpy"]
        err = max(np.abs(a[0] - b[0]).max() / np.abs(b[0]).max(),
                  np.abs(a[1] - b[1]).max() / np.abs(b[1]).max())
        print(f"max relative difference between backends: {err:.2e}")


if __name__ == "__main__":
    main()
