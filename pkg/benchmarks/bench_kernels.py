"""Compiled vs NumPy time-stepping kernels.

Usage: python benchmarks/bench_kernels.py [--repeat R]

Times the forward and adjoint sweeps on the S4 geometry at a few sizes,
plus a single tridiagonal solve, and checks that both backends return the
same numbers.
"""

import argparse
import time

import numpy as np

from degenctl import coefficients as co
from degenctl.discretization import NON_DIVERGENCE, DiscreteOperatorFactory, build_grid
from degenctl.evolution import ForwardModel, TimeGrid
from degenctl.kernels import available_backends

SIZES = ((64, 128), (128, 256), (256, 512))


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    rng = np.random.default_rng(0)
    prof = co.power_profile(0, 1.5)
    header = f"{'N':>5} {'Nt':>5} {'kernel':>8} " + " ".join(f"{b:>12}" for b in backends)
    if "cython" in backends:
        header += f" {'speedup':>8}"
    print(header)
    for N, Nt in SIZES:
        fac = DiscreteOperatorFactory(NON_DIVERGENCE, prof, co.sine_b(), build_grid(N, prof), 1.0)
        m = ForwardModel(fac, co.exponential_kernel(1.0, 1.0), TimeGrid(1.0, Nt))
        U = fac.unit
        args_ = (U.lower, U.diag, U.upper, m.bvals, 1.0, m.tgrid.dt, m.memory_matrix)
        u0, inj = rng.standard_normal(N), rng.standard_normal((Nt + 1, N))
        results = {}
        for name, mod in backends.items():
            results[name] = (mod.forward_sweep(*args_, u0, inj, True), mod.adjoint_sweep(*args_, inj, True))
        if "cython" in results:
            for a, b in zip(results["cython"], results["python"]):
                assert np.allclose(a, b, rtol=1e-11, atol=1e-13), "backends disagree"
        jobs = {
            "forward": lambda mod: mod.forward_sweep(*args_, u0, inj, True),
            "adjoint": lambda mod: mod.adjoint_sweep(*args_, inj, True),
        }
        for label, job in jobs.items():
            t = {name: _best(lambda: job(mod), args.repeat) for name, mod in backends.items()}
            line = f"{N:>5} {Nt:>5} {label:>8} " + " ".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
            if "cython" in t:
                line += f" {t['python'] / t['cython']:>7.1f}x"
            print(line)

    n = 4096
    lo, up = rng.random(n), rng.random(n)
    di, rhs = 4.0 + rng.random(n), rng.standard_normal(n)
    t = {name: _best(lambda: mod.thomas_solve(lo, di, up, rhs), args.repeat) for name, mod in backends.items()}
    line = f"{n:>5} {'-':>5} {'thomas':>8} " + " ".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
    if "cython" in t:
        line += f" {t['python'] / t['cython']:>7.1f}x"
    print(line)


if __name__ == "__main__":
    main()
