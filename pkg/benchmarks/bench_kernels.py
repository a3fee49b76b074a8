#!/usr/bin/env python3
"""Benchmark the compiled pointwise kernels against the numpy fallback.

Times the four batched kernels on a 16^4 grid's worth of points and one full
flow step on the reference background, for whichever backends are available.

Usage: python3 benchmarks/bench_kernels.py [n_per_dim]
"""

import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

import numpy as np

from torusphase import _kernels_py

try:
    from torusphase import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeat=50):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat * 1e3


def bench_kernels(n_points):
    rng = np.random.default_rng(0)
    f11 = rng.standard_normal(n_points) + 3.0
    f12 = rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points)
    f22 = rng.standard_normal(n_points) + 3.0
    h11, h12, h22 = f11.copy(), f12.copy(), f22.copy()
    g1 = rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points)
    g2 = rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points)
    alpha = np.array([[1.5, 0.2 + 0.1j], [0.2 - 0.1j, 1.0]])
    ia = np.linalg.inv(alpha)
    det = np.linalg.det(alpha).real
    a_args = (alpha[0, 0].real, complex(alpha[0, 1]), alpha[1, 1].real)
    ia_args = (ia[0, 0].real, complex(ia[0, 1]), ia[1, 1].real)
    e11, e12, e22 = _kernels_py.eta_inv(f11, f12, f22, *a_args, *ia_args)

    threads = int(os.environ.get("TORUSPHASE_WORKERS", os.cpu_count() or 1))
    rows = []
    cases = {
        "pencil_phase": (
            lambda: _kernels_py.pencil_phase(f11, f12, f22, *ia_args, 1.0 / det),
            (lambda: _kernels_cy.pencil_phase(f11, f12, f22, *ia_args, 1.0 / det, threads))
            if _kernels_cy else None,
        ),
        "eta_inv": (
            lambda: _kernels_py.eta_inv(f11, f12, f22, *a_args, *ia_args),
            (lambda: _kernels_cy.eta_inv(f11, f12, f22, *a_args, *ia_args, threads))
            if _kernels_cy else None,
        ),
        "trace_contract": (
            lambda: _kernels_py.trace_contract(e11, e12, e22, h11, h12, h22),
            (lambda: _kernels_cy.trace_contract(e11, e12, e22, h11, h12, h22, threads))
            if _kernels_cy else None,
        ),
        "grad_quadratic": (
            lambda: _kernels_py.grad_quadratic(e11, e12, e22, g1, g2),
            (lambda: _kernels_cy.grad_quadratic(e11, e12, e22, g1, g2, threads))
            if _kernels_cy else None,
        ),
    }
    for name, (py_fn, cy_fn) in cases.items():
        t_py = timeit(py_fn)
        t_cy = timeit(cy_fn) if cy_fn else float("nan")
        rows.append((name, t_py, t_cy))
    return rows


def bench_flow_step(n):
    import torusphase as tp
    from torusphase.fields import grid_coords
    from torusphase.flow import FlowState, cfl_dt, step
    from torusphase.functionals import evaluate_state

    g = tp.GridSpec(n)
    x = grid_coords(g)
    bump = tp.ScalarField(
        g, np.broadcast_to(0.1 * np.sin(2 * np.pi * x[0]) * np.sin(2 * np.pi * x[2]), g.shape).copy()
    )
    bg = tp.make_background(g, np.eye(2), 3.0 * np.eye(2), bump)
    s0 = FlowState(0.0, evaluate_state(tp.ScalarField(g, np.zeros(g.shape)), bg))
    dt = cfl_dt(s0.cache, g, 0.2)
    return timeit(lambda: step(s0, bg, dt, "explicit-rk4"), repeat=20)


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 16
    n_points = n**4
    print(f"pointwise kernels on {n_points} points (grid {n}^4)")
    print(f"{'kernel':<16} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, t_py, t_cy in bench_kernels(n_points):
        ratio = t_py / t_cy if t_cy == t_cy else float("nan")
        print(f"{name:<16} {t_py:10.3f} {t_cy:12.3f} {ratio:7.2f}x")
    if _kernels_cy is None:
        print("(compiled kernels not built: python3 setup.py build_ext --inplace)")
    t_step = bench_flow_step(n)
    from torusphase import kernel_backend

    print(f"\nfull rk4 flow step ({kernel_backend()} backend): {t_step:.1f} ms")


if __name__ == "__main__":
    main()
