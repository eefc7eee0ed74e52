"""Compare the compiled and numpy Godunov kernels.

Runs ``advance`` on the same data with every available backend, reports the
best wall time per step and the speedup, and checks that the final states
agree to rounding.

    python3 benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--t-end 2.0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from burgerlab import kernels
from burgerlab.forcing import ForcingSpec
from burgerlab.torus import make_grid, sine_field


def _inputs(n: int, omega: float):
    grid = make_grid(n)
    spec = ForcingSpec.cosine_squared(1, omega)
    if spec.steady:
        return grid, spec.sample_steady(grid), np.zeros(0, dtype=np.int64), \
            np.zeros((0, n)), np.zeros((0, n))
    ks, bc, bs = spec.traveling_basis(grid)
    return grid, np.zeros(n), np.ascontiguousarray(ks, dtype=np.int64), \
        np.ascontiguousarray(bc), np.ascontiguousarray(bs)


def run(n: int, t_end: float, omega: float, repeats: int) -> dict:
    grid, fs, ks, bc, bs = _inputs(n, omega)
    u0 = np.array(sine_field(grid).values)
    out = {}
    for name, mod in kernels.backends().items():
        best = np.inf
        for _ in range(repeats):
            u = u0.copy()
            t0 = time.perf_counter()
            _, steps, _, _ = mod.advance(u, 0.0, t_end, grid.dx, 0.45, fs, ks, bc, bs, omega)
            best = min(best, time.perf_counter() - t0)
        out[name] = (best / steps, steps, u)
    return out


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--omega", type=float, default=0.0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    names = sorted(kernels.backends())
    print(f"backends: {', '.join(names)}; t_end = {args.t_end}, omega = {args.omega}")
    print(f"{'n':>6} {'steps':>7} " + " ".join(f"{nm + ' us/step':>16}" for nm in names)
          + f" {'speedup':>8} {'max|diff|':>10}")
    for n in args.sizes:
        res = run(n, args.t_end, args.omega, args.repeats)
        steps = res[names[0]][1]
        cols = " ".join(f"{1e6 * res[nm][0]:16.2f}" for nm in names)
        if "cython" in res:
            speed = res["numpy"][0] / res["cython"][0]
            diff = float(np.max(np.abs(res["numpy"][2] - res["cython"][2])))
            tail = f" {speed:8.1f} {diff:10.2e}"
        else:
            tail = f" {'n/a':>8} {'n/a':>10}"
        print(f"{n:6d} {steps:7d} {cols}{tail}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
