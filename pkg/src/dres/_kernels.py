"""Hot numeric kernels: exact squared Euclidean distances, numba-accelerated.

The backend is chosen once at import time from the ``DRES_BACKEND``
environment variable: ``numba`` (default) or ``numpy``. The numpy path is a
pure-vectorized fallback used when numba is unavailable or explicitly
requested; both compute the same diff-and-accumulate formulation, so results
agree to the last few ulps and all exact ties (duplicate points) are exact
in either path.
"""

import os

import numpy as np

__all__ = [
    "BACKEND",
    "pairwise_sq_dists",
    "pairwise_sq_dists_numpy",
    "pairwise_sq_dists_numba",
]


def pairwise_sq_dists_numpy(queries: np.ndarray, corpus: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape (n_queries, n_corpus), float64."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    corpus = np.ascontiguousarray(corpus, dtype=np.float64)
    out = np.empty((queries.shape[0], corpus.shape[0]), dtype=np.float64)
    # Row-at-a-time keeps peak memory at O(n_corpus * dim).
    for i in range(queries.shape[0]):
        diff = corpus - queries[i]
        np.einsum("ij,ij->i", diff, diff, out=out[i])
    return out


_requested = os.environ.get("DRES_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"DRES_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

pairwise_sq_dists_numba = None

if _requested == "numba":
    try:
        from numba import njit
    except ImportError:
        njit = None

    if njit is not None:

        @njit(cache=True, nogil=True)
        def _pairwise_sq_dists_jit(queries, corpus):  # pragma: no cover - compiled
            nq, d = queries.shape
            nc = corpus.shape[0]
            out = np.empty((nq, nc), dtype=np.float64)
            for i in range(nq):
                for j in range(nc):
                    acc = 0.0
                    for t in range(d):
                        diff = queries[i, t] - corpus[j, t]
                        acc += diff * diff
                    out[i, j] = acc
            return out

        def pairwise_sq_dists_numba(queries, corpus):
            queries = np.ascontiguousarray(queries, dtype=np.float64)
            corpus = np.ascontiguousarray(corpus, dtype=np.float64)
            return _pairwise_sq_dists_jit(queries, corpus)

BACKEND = "numba" if pairwise_sq_dists_numba is not None else "numpy"

if BACKEND == "numba":
    pairwise_sq_dists = pairwise_sq_dists_numba
else:
    pairwise_sq_dists = pairwise_sq_dists_numpy
