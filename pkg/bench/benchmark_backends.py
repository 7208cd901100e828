"""Benchmark the numba and pure-numpy backends on the hot kernels.

Runs itself twice in subprocesses (the backend is fixed at import time
via TYPWEIGHT_BACKEND), times the pairwise-kernel and SMO-solver
workloads, and prints a side-by-side table. JIT compilation is excluded
by a warmup pass.

Usage: python bench/benchmark_backends.py [--n 2000] [--dim 32]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_worker(n: int, dim: int) -> dict:
    import numpy as np

    from typweight._accel import BACKEND
    from typweight.kernels import KernelSpec, kernel_matrix, median_heuristic
    from typweight.ocsvm import decision_scores, fit_ocsvm, solve_dual

    rng = np.random.default_rng(0)
    # cluster-structured data, as in the library's real workloads
    centers = rng.standard_normal((6, dim)) * 3.0
    x = rng.standard_normal((n, dim)) + centers[rng.integers(0, 6, n)]
    queries = rng.standard_normal((5 * n, dim)) + centers[rng.integers(0, 6, 5 * n)]

    # warmup: compile / prime caches on a small instance
    fit_ocsvm(x[:64], nu=0.2, seed=0)

    timings = {}
    t0 = time.perf_counter()
    bw = median_heuristic(x, seed=0)
    spec = KernelSpec("rbf", bw)
    q = kernel_matrix(spec, x, x)
    timings["gram_matrix"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    alpha, _, iters, gap = solve_dual(q, nu=0.1)
    timings["smo_solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    model = fit_ocsvm(x, nu=0.1, kernel=spec, seed=0)
    timings["full_fit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    scores = decision_scores(model, queries)
    timings["score_queries"] = time.perf_counter() - t0

    return {
        "backend": BACKEND,
        "n": n,
        "dim": dim,
        "smo_iterations": int(iters),
        "kkt_gap": float(gap),
        "checksum": float(scores.sum()),
        "timings": timings,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="training points")
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_worker(args.n, args.dim)))
        return 0

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, TYPWEIGHT_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--n", str(args.n),
             "--dim", str(args.dim)],
            capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(f"{backend} worker failed:\n{proc.stderr}", file=sys.stderr)
            return 1
        results[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    ops = list(results["numba"]["timings"])
    print(f"\nhot-kernel benchmark (N={args.n}, D={args.dim})\n")
    print(f"{'operation':<16} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for op in ops:
        tb = results["numba"]["timings"][op]
        tp = results["numpy"]["timings"][op]
        print(f"{op:<16} {tb:>9.3f}s {tp:>9.3f}s {tp / tb:>8.1f}x")
    da = abs(results["numba"]["checksum"] - results["numpy"]["checksum"])
    rel = da / max(1.0, abs(results["numba"]["checksum"]))
    print(f"\nscore checksum agreement: relative difference {rel:.2e}")
    print(f"smo iterations: numba {results['numba']['smo_iterations']}, "
          f"numpy {results['numpy']['smo_iterations']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
