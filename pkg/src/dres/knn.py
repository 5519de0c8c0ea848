"""Exact k-nearest-neighbor search within one view's feature space.

Linear scan over the indexed subset (desk-scale corpora), squared distances
from the shared kernels, and a total (distance, original index) ordering so
every query is fully deterministic. Optional per-feature z-scoring uses the
indexed subset's statistics; zero-variance features get std clamped to 1.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import pairwise_sq_dists
from .data import DataFormatError, ViewMatrix


@dataclass(frozen=True)
class NeighborList:
    query_id: object
    indices: np.ndarray   # original dataset row indices, nearest first
    distances: np.ndarray  # Euclidean, non-decreasing
    k: int

    def __len__(self):
        return len(self.indices)


class KnnIndex:
    """Immutable exact-search index over a subset of one view's rows."""

    def __init__(self, view_name, ids, points, mean=None, std=None):
        self.view_name = view_name
        self.ids = ids
        self.points = points
        self.mean = mean
        self.std = std
        self.dim = points.shape[1]
        self._by_id = {int(i): pos for pos, i in enumerate(ids)}

    def __len__(self):
        return len(self.ids)

    @property
    def standardized(self) -> bool:
        return self.mean is not None

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.mean is not None:
            x = (x - self.mean) / self.std
        return x


def build_index(view: ViewMatrix, indices=None, standardize: bool = True) -> KnnIndex:
    """Index a subset of ``view``'s rows (all rows when ``indices`` is None)."""
    if indices is None:
        indices = np.arange(view.rows, dtype=np.int64)
    else:
        indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise DataFormatError(f"view {view.name!r}: cannot index an empty subset")
    if indices.min() < 0 or indices.max() >= view.rows:
        raise DataFormatError(
            f"view {view.name!r}: subset indices out of range [0, {view.rows})"
        )
    points = np.asarray(view.data[indices], dtype=np.float64)
    mean = std = None
    if standardize:
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        points = (points - mean) / std
    points = np.ascontiguousarray(points)
    return KnnIndex(view.name, indices, points, mean, std)


def _select(d2: np.ndarray, ids: np.ndarray, k: int, query_id=None) -> NeighborList:
    order = np.lexsort((ids, d2))
    if not np.isfinite(d2[order[-1]]):  # drop masked (excluded) entries
        order = order[np.isfinite(d2[order])]
    take = order[: min(k, len(order))]
    return NeighborList(
        query_id=query_id,
        indices=ids[take].copy(),
        distances=np.sqrt(d2[take]),
        k=k,
    )


def query(index: KnnIndex, point: np.ndarray, k: int, exclude_self=None,
          query_id=None) -> NeighborList:
    """Exact Euclidean k-NN of ``point`` over the indexed subset.

    Ties are broken by original row index. ``exclude_self`` names an original
    row index to drop from the candidates (the query's own row).
    """
    point = np.asarray(point, dtype=np.float64).ravel()
    if point.shape[0] != index.dim:
        raise DataFormatError(
            f"view {index.view_name!r}: query dim {point.shape[0]} != index dim {index.dim}"
        )
    if k < 1:
        raise DataFormatError(f"k must be >= 1, got {k}")
    q = index.transform(point)
    d2 = pairwise_sq_dists(q[None, :], index.points)[0]
    if exclude_self is not None:
        pos = index._by_id.get(int(exclude_self))
        if pos is not None:
            d2 = d2.copy()
            d2[pos] = np.inf
    return _select(d2, index.ids, k, query_id=query_id)


def query_all_pairs(index: KnnIndex, k: int) -> np.ndarray:
    """For every indexed point, its k nearest other indexed points.

    Returns an (n, min(k, n-1)) array of original row indices; each point's
    own row is excluded. Used by the hardness computation.
    """
    n = len(index)
    kk = min(k, n - 1)
    if kk < 1:
        raise DataFormatError("need at least 2 indexed points for self-excluded kNN")
    d2 = pairwise_sq_dists(index.points, index.points)
    np.fill_diagonal(d2, np.inf)
    out = np.empty((n, kk), dtype=np.int64)
    for i in range(n):
        order = np.lexsort((index.ids, d2[i]))
        out[i] = index.ids[order[:kk]]
    return out
