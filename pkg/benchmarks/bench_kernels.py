"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--n 1024] [--repeat 200]

Both backends live side by side in ``shocklab.kernels`` so one process
can compare them; ``SHOCKLAB_BACKEND=numpy`` only changes which one the
solver picks.
"""

import argparse
import time

import numpy as np

from shocklab import kernels


def best_of(fn, repeat):
    fn()  # compile / warm caches
    times = []
    for _ in range(5):
        t = time.perf_counter()
        for _ in range(repeat):
            fn()
        times.append((time.perf_counter() - t) / repeat)
    return min(times)


def cases(n, rows):
    rng = np.random.default_rng(0)
    u = rng.normal(size=(rows, n))
    out = np.empty_like(u)
    dvx = 1e-3 * rng.normal(size=n)
    gl, gr = u[:, -1].copy(), u[:, 0].copy()
    block = 1e-3 * rng.normal(size=(64, n))
    h = rng.uniform(0.5, 1.5, size=(2, n))
    hout = np.empty_like(h)
    z = np.cumsum(rng.uniform(0.5, 1.0, n))
    zout = np.empty_like(z)
    vel = rng.normal(size=n)
    dx = 40.0 / n
    dt = 0.5 * dx * dx

    def make(k):
        return {
            "burgers_step": lambda: k["burgers_step"](u, out, dvx, dt, dx, kernels.CENTRAL, gl, gr, True),
            "burgers_block(64)": lambda: k["burgers_block"](u.copy(), block, dt, dx, kernels.CENTRAL),
            "kpz_step": lambda: k["kpz_step"](h, hout, dvx, dt, dx, 1e-4, h[:, -1], h[:, 0]),
            "she_step": lambda: k["she_step"](h, hout, dvx, dt, dx, 1e-4, h[:, -1], h[:, 0]),
            "z_step": lambda: k["z_step"](z, zout, vel, dt, dx, z[0] - 1.0, z[-1] + 1.0, False),
        }

    return make(kernels.NUMBA_KERNELS), make(kernels.NUMPY_KERNELS)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--rows", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    nb, npy = cases(args.n, args.rows)
    print(f"n={args.n} rows={args.rows}  (seconds per call, best of 5)")
    print(f"{'kernel':<20}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name in nb:
        a, b = best_of(nb[name], args.repeat), best_of(npy[name], args.repeat)
        print(f"{name:<20}{a:>12.2e}{b:>12.2e}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
