#!/usr/bin/env python3
"""Benchmark the compiled simulation kernel against the numpy fallback.

Runs the bundled 100-agent tracking scenario end to end through each
available backend, reports per-run wall time, and checks that the two
backends agree on the error metrics.

    python benchmarks/bench_kernels.py [--repeats N] [--runs R]
"""

import argparse
import time

import numpy as np

import sdcf.kernels as kernels
from sdcf.harness import builtin_scenario_path, load_scenario, resolve, run_simulation


def time_backend(name, fn, rs, runs, repeats):
    kernels.run_filter = fn
    best = float("inf")
    trace = None
    for _ in range(repeats):
        start = time.perf_counter()
        for r in range(runs):
            trace = run_simulation(rs, r)
        best = min(best, (time.perf_counter() - start) / runs)
    return best, trace


def kernel_args(rs):
    """One realization's kernel inputs, prepared outside the timed region."""
    from sdcf.harness import _attack_arrays, _presample_noise
    from sdcf.plant import rng_stream, sample_in_ball

    model = rs.model
    w, v = _presample_noise(rs, 0)
    x_traj = np.empty((rs.horizon + 1, model.n))
    x_traj[0] = rs.x0
    for t in range(rs.horizon):
        x_traj[t + 1] = model.A @ x_traj[t] + w[t]
    clean = x_traj[1:] @ model.C.T + v
    xhat0 = np.vstack([
        rs.x0 + sample_in_ball(model.eta[i], model.n, rng_stream(rs.master_seed, 2, 0, 2, i))
        for i in range(model.n_agents)
    ])
    mode, values, magnitude = _attack_arrays(rs, 0, clean)
    indptr, indices = rs.graph.neighbor_csr()
    return (
        model.A, model.C, indptr, indices, rs.alpha, rs.cfg.beta, rs.cfg.L,
        xhat0, x_traj, clean, rs.attack.mask(model.n_agents), mode, values,
        magnitude, rs.divergence_threshold,
    )


def time_kernel_only(fn, args, repeats, calls=50):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(calls):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / calls)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--runs", type=int, default=20)
    args = parser.parse_args()

    rs = resolve(load_scenario(builtin_scenario_path("fig2_tracking")))
    print(
        f"scenario: {rs.n_agents} agents, state dim {rs.model.n}, "
        f"T={rs.horizon}, L={rs.cfg.L}, {rs.graph.n_edges} edges"
    )

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; benchmarking the fallback only")

    original = kernels.run_filter
    results = {}
    kernel_times = {}
    shared_args = kernel_args(rs)
    try:
        for name, fn in backends.items():
            per_run, trace = time_backend(name, fn, rs, args.runs, args.repeats)
            results[name] = (per_run, trace)
            kernel_times[name] = time_kernel_only(fn, shared_args, args.repeats)
            print(
                f"{name:>9}: {per_run * 1e3:8.2f} ms/run end-to-end, "
                f"{kernel_times[name] * 1e3:8.2f} ms kernel only"
            )
    finally:
        kernels.run_filter = original

    if len(results) == 2:
        py_time, py_trace = results["python"]
        c_time, c_trace = results["compiled"]
        print(f"  end-to-end speedup: {py_time / c_time:.1f}x")
        print(f"  kernel speedup:     {kernel_times['python'] / kernel_times['compiled']:.1f}x")
        diff = np.nanmax(np.abs(py_trace.err_norms - c_trace.err_norms))
        print(f"  max |err_norm| disagreement on the last run: {diff:.3e}")


if __name__ == "__main__":
    main()
