"""Benchmark the pairwise-distance kernel: numba JIT vs pure numpy.

The engine picks its backend from DRES_BACKEND at import time; this script
times both implementations directly on corpus/query shapes typical for the
hardness matrix (all-pairs over DSEL) and per-query RoC retrieval.

Usage: python benchmarks/bench_knn.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from dres._kernels import pairwise_sq_dists_numba, pairwise_sq_dists_numpy

SHAPES = [
    ("hardness all-pairs, small", (400, 400, 8)),
    ("hardness all-pairs, large", (2000, 2000, 32)),
    ("query batch, wide view", (500, 4000, 256)),
    ("query batch, huge dim", (100, 2000, 2048)),
]


def time_fn(fn, queries, corpus, repeats):
    fn(queries[:2], corpus[:2])  # warm-up (JIT compile / cache touch)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(queries, corpus)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if pairwise_sq_dists_numba is None:
        print("numba backend unavailable; benchmarking numpy only")

    rng = np.random.default_rng(0)
    print(f"{'case':28s} {'shape':>18s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, (nq, nc, d) in SHAPES:
        queries = rng.normal(size=(nq, d))
        corpus = rng.normal(size=(nc, d))
        t_np = time_fn(pairwise_sq_dists_numpy, queries, corpus, args.repeats)
        if pairwise_sq_dists_numba is not None:
            t_nb = time_fn(pairwise_sq_dists_numba, queries, corpus, args.repeats)
            a = pairwise_sq_dists_numpy(queries[:5], corpus[:50])
            b = pairwise_sq_dists_numba(queries[:5], corpus[:50])
            assert np.allclose(a, b, rtol=1e-12)
            print(f"{name:28s} {nq}x{nc}x{d:<6d} {t_np * 1e3:9.1f}ms "
                  f"{t_nb * 1e3:9.1f}ms {t_np / t_nb:7.2f}x")
        else:
            print(f"{name:28s} {nq}x{nc}x{d:<6d} {t_np * 1e3:9.1f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
