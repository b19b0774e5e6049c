"""Benchmark the compiled expansion kernel against the numpy fallback.

Times the raw generation-expansion kernel on synthetic workloads and the
end-to-end population simulation, which also exercises sampling and
aggregation. Run from the repository root:

    python benchmarks/kernel_benchmark.py
"""

import time

import numpy as np

from kinetic_brw._kernel import _python
from kinetic_brw import power_uniform_split, simulate_population

try:
    from kinetic_brw._kernel import _speedups
except ImportError:
    _speedups = None


def synthetic_generation(rng, n_parents):
    parent_pos = rng.normal(size=n_parents)
    parent_death = rng.uniform(0.0, 2.0, n_parents)
    counts = np.full(n_parents, 2, dtype=np.int64)
    neg_log_w = rng.exponential(0.7, 2 * n_parents)
    lifetimes = rng.standard_exponential(2 * n_parents)
    return parent_pos, parent_death, counts, neg_log_w, lifetimes


def time_kernel(fn, args, t, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args, t)
        best = min(best, time.perf_counter() - start)
    return best


def bench_raw():
    print("raw expand_generation (children/s, best of 7)")
    print(f"{'n_parents':>10} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n_parents in (1_000, 10_000, 100_000, 1_000_000):
        args = synthetic_generation(rng, n_parents)
        n_children = 2 * n_parents
        t_py = time_kernel(_python.expand_generation, args, 1.0, 7)
        row = f"{n_parents:>10} {n_children / t_py:>12.3g}"
        if _speedups is not None:
            t_cy = time_kernel(_speedups.expand_generation, args, 1.0, 7)
            row += f" {n_children / t_cy:>12.3g} {t_py / t_cy:>8.2f}x"
        else:
            row += f" {'n/a':>12} {'':>8}"
        print(row)


def bench_end_to_end(replicates=80):
    import kinetic_brw.brw_engine as engine

    print(f"\nend-to-end simulate_population, power_uniform_split(2), {replicates} replicates")
    print(f"{'t':>4} {'particles':>12} {'numpy s':>9} {'compiled s':>11} {'speedup':>8}")
    model = power_uniform_split(2.0)
    original = engine.expand_generation
    try:
        for t in (8.0, 10.0, 12.0):
            results = {}
            for name, impl in (("numpy", _python.expand_generation),
                               ("compiled", getattr(_speedups, "expand_generation", None))):
                if impl is None:
                    continue
                engine.expand_generation = impl
                rngs = np.random.default_rng(5).spawn(replicates)
                start = time.perf_counter()
                total = 0
                for child in rngs:
                    snap = simulate_population(model, t, child, cap=50_000_000)
                    total += snap.particles_processed
                results[name] = (time.perf_counter() - start, total)
            t_py, n = results["numpy"]
            row = f"{t:>4.0f} {n:>12} {t_py:>9.3f}"
            if "compiled" in results:
                t_cy, _ = results["compiled"]
                row += f" {t_cy:>11.3f} {t_py / t_cy:>8.2f}x"
            else:
                row += f" {'n/a':>11} {'':>8}"
            print(row)
    finally:
        engine.expand_generation = original


if __name__ == "__main__":
    if _speedups is None:
        print("compiled kernel not available; timing the numpy fallback only\n")
    bench_raw()
    bench_end_to_end()
