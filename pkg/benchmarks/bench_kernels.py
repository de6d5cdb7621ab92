"""Time each hot kernel under the numba and numpy backends, plus one full search.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The full search runs in a subprocess per backend so the environment flag
decides the backend exactly as it would for a user.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from soicf import kernels

SEARCH = """
import time
from soicf import kernels
from soicf.classifier import fit_knn_softmax
from soicf.evolution import RunConfig, run_explain
from soicf.timeseries import cbf_train_test
train, test = cbf_train_test(30, 5, 128, seed=0)
f = fit_knn_softmax(train)
run_explain(test.X[0], f, train, RunConfig(pop_size=10, generations=2))  # warm-up / JIT
t0 = time.perf_counter()
for i in range(5):
    run_explain(test.X[i], f, train, RunConfig(seed=i))
print(kernels.BACKEND, (time.perf_counter() - t0) / 5)
"""


def workloads(rng):
    m = 128
    target = rng.standard_normal(m)
    refs = rng.standard_normal((4, m))
    starts = rng.integers(0, m - 1, size=400)
    chroms = np.stack([starts, rng.integers(starts + 1, m + 1), rng.integers(0, 4, size=400)], axis=1)
    F = np.ascontiguousarray(rng.random((250, 2)))
    P = rng.dirichlet(np.ones(3), size=5000)
    Q = rng.dirichlet(np.ones(3), size=5000)
    A, B = rng.standard_normal((400, m)), rng.standard_normal((30, m))
    z = rng.standard_normal(140)
    return {
        "generate_batch (400 x 128)": lambda k: k.generate_batch(target, refs, chroms, 4),
        "nondominated_ranks (250)": lambda k: k.nondominated_ranks(F),
        "crowding_distance (250)": lambda k: k.crowding_distance(F, k.nondominated_ranks(F)),
        "js_rows (5000 x 3)": lambda k: k.js_rows(P, Q),
        "sqeuclidean (400 x 30 x 128)": lambda k: k.sqeuclidean(A, B),
        "ar_fit (n=140, p=4)": lambda k: k.ar_fit(z, 4),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-search", action="store_true")
    args = ap.parse_args()

    backends = {"numpy": kernels.backend("numpy")}
    try:
        backends["numba"] = kernels.backend("numba")
    except ImportError:
        print("numba not installed; timing the numpy backend only")
    jobs = workloads(np.random.default_rng(0))
    print(f"{'kernel':<30}" + "".join(f"{name + ' (ms)':>14}" for name in backends) + f"{'speedup':>10}")
    for label, job in jobs.items():
        times = {}
        for name, k in backends.items():
            job(k)  # compile / warm caches
            timer = timeit.Timer(lambda: job(k))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number * 1e3
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{label:<30}" + "".join(f"{t:>14.3f}" for t in times.values()) + f"{speed:>9.1f}x")

    if not args.skip_search:
        print("\nfull search, default config (N=50, G=50, K=4), CBF length 128, mean of 5 targets")
        for name in backends:
            env = dict(os.environ, SOICF_DISABLE_NUMBA="1" if name == "numpy" else "")
            out = subprocess.run([sys.executable, "-c", SEARCH], env=env, capture_output=True, text=True, check=True)
            backend, seconds = out.stdout.split()
            print(f"  {backend:<8}{float(seconds):8.2f} s per target")


if __name__ == "__main__":
    main()
