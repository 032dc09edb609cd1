#!/usr/bin/env python3
"""Timing comparison of the compiled and interpreted dense kernels.

Runs the LU solve, eigenvalue, and spectral-radius kernels on the matrix
sizes the frequency sweeps actually use, plus one small two-grid sweep
end to end under each backend. Invoke from the repository root:

    python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np


def bench_kernels(label, impl, sizes=(2, 4, 8, 16, 32), reps=300):
    rng = np.random.default_rng(0)
    print(f"-- {label} backend", flush=True)
    for n in sizes:
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t0 = time.perf_counter()
        for _ in range(reps):
            impl.lu_solve(a, b)
        t_lu = (time.perf_counter() - t0) / reps
        t0 = time.perf_counter()
        for _ in range(reps):
            impl.eigenvalues(a)
        t_eig = (time.perf_counter() - t0) / reps
        print(f"   n={n:3d}  lu_solve {t_lu * 1e6:9.1f} us   eigenvalues {t_eig * 1e6:9.1f} us", flush=True)


def bench_sweep(label):
    """One two-grid sweep per backend, in a subprocess so the import-time
    backend selection can differ."""
    code = (
        "import time; from stmg import lfa, linalg;"
        "cfg = lfa.LfaConfig(mu=800.0, p_t=1, strategy='semi');"
        "grid = lfa.FrequencyGrid(32, 8);"
        "t0 = time.perf_counter(); r = lfa.twogrid_factor(cfg, grid);"
        "print(f'   {linalg.backend()}: factor sweep (32x8, p_t=1) "
        "{time.perf_counter() - t0:.3f}s  factor={r.factor:.4f}')"
    )
    env = dict(os.environ)
    if label == "python":
        env["STMG_PURE"] = "1"
    else:
        env.pop("STMG_PURE", None)
    subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    from stmg import _kernels_py

    bench_kernels("python", _kernels_py)
    try:
        from stmg import _kernels
    except ImportError:
        print("-- compiled backend not built (pip install -e . compiles it)", flush=True)
    else:
        bench_kernels("compiled", _kernels)
    print("-- end-to-end sweep", flush=True)
    bench_sweep("compiled")
    bench_sweep("python")


if __name__ == "__main__":
    main()
