"""Instance hardness: kDN scores over the DSEL set, test-time hardness
estimation for queries, easiest-view selection, and cross-view hardness
distribution statistics.

kDN of an instance is the fraction of its k nearest same-view neighbors
(self excluded) whose label differs from its own. A query's test-time
hardness in a view is the mean of the stored kDN scores of its k nearest
DSEL neighbors in that view.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .data import DataFormatError, MultiViewDataset, ViewMatrix
from .knn import KnnIndex, build_index, query, query_all_pairs


@dataclass(frozen=True)
class HardnessMatrix:
    """Per-(DSEL instance, view) kDN scores; every score is a multiple of 1/k."""

    scores: np.ndarray      # (|DSEL|, n_views) float64
    k: int
    view_names: tuple
    row_ids: np.ndarray     # original dataset row index per score row

    def row_of(self, original_index: int) -> int:
        pos = np.searchsorted(self.row_ids, original_index)
        if pos >= len(self.row_ids) or self.row_ids[pos] != original_index:
            raise KeyError(f"row {original_index} not in hardness matrix")
        return int(pos)

    @property
    def per_view_mean(self) -> np.ndarray:
        return self.scores.mean(axis=0)


@dataclass(frozen=True)
class TestTimeHardness:
    __test__ = False  # "Test" prefix is domain naming, not a pytest case

    per_view: np.ndarray        # estimated hardness per view
    neighbor_ids: tuple         # per view, the k DSEL rows used


@dataclass(frozen=True)
class ViewChoice:
    chosen_view: int
    tie_broken: bool
    per_view_hardness: np.ndarray


@dataclass(frozen=True)
class HardnessStats:
    ranges: np.ndarray          # per instance max-min across views
    stds: np.ndarray            # population std across views
    cvs: np.ndarray             # std/mean, 0 where mean == 0
    zero_mean: np.ndarray       # flags rows where CV was forced to 0
    range_profile: np.ndarray   # ranges sorted ascending


def compute_kdn(view: ViewMatrix, labels: np.ndarray, subset, k: int,
                standardize: bool = True) -> np.ndarray:
    """kDN score for every instance in ``subset``, computed within the subset.

    Returns one hardness column aligned with ``subset`` order.
    """
    subset = np.asarray(subset, dtype=np.int64)
    if k < 1:
        raise DataFormatError(f"k must be >= 1, got {k}")
    if subset.size <= k:
        raise DataFormatError(
            f"subset size {subset.size} must exceed k={k} for self-excluded kDN"
        )
    labels = np.asarray(labels, dtype=np.int64)
    index = build_index(view, subset, standardize=standardize)
    neighbors = query_all_pairs(index, k)   # (n, k) original row indices
    own = labels[subset][:, None]
    disagree = labels[neighbors] != own
    return disagree.sum(axis=1).astype(np.float64) / k


def build_hardness_matrix(dataset: MultiViewDataset, dsel_indices, k: int,
                          standardize: bool = True) -> HardnessMatrix:
    """One kDN column per view, all over the DSEL subset; column order is
    the dataset's view order."""
    dsel_indices = np.asarray(dsel_indices, dtype=np.int64)
    if np.any(np.diff(dsel_indices) <= 0):
        dsel_indices = np.unique(dsel_indices)
    cols = [
        compute_kdn(v, dataset.labels, dsel_indices, k, standardize=standardize)
        for v in dataset.views
    ]
    return HardnessMatrix(
        scores=np.column_stack(cols),
        k=int(k),
        view_names=tuple(dataset.view_names),
        row_ids=dsel_indices,
    )


def estimate_test_hardness(query_vecs, indexes, hmatrix: HardnessMatrix,
                           k: int) -> TestTimeHardness:
    """Test-time hardness of one query: per view, the mean stored kDN of its
    k nearest DSEL neighbors in that view.

    ``query_vecs`` holds one feature vector per view; ``indexes`` the DSEL
    KnnIndex per view, in the same order as the hardness columns.
    """
    if len(query_vecs) != len(indexes) or len(indexes) != len(hmatrix.view_names):
        raise DataFormatError("query vector / index / hardness view counts differ")
    per_view = np.empty(len(indexes), dtype=np.float64)
    neighbor_ids = []
    for j, (vec, index) in enumerate(zip(query_vecs, indexes)):
        nl = query(index, vec, k)
        rows = [hmatrix.row_of(int(i)) for i in nl.indices]
        scores = hmatrix.scores[rows, j]
        total = 0.0
        for s in scores:  # fixed accumulation order: nearest first
            total += float(s)
        per_view[j] = total / len(scores)
        neighbor_ids.append(np.asarray(nl.indices))
    return TestTimeHardness(per_view=per_view, neighbor_ids=tuple(neighbor_ids))


def select_view(tth: TestTimeHardness, dsel_mean_hardness) -> ViewChoice:
    """Pick the view with the lowest estimated hardness.

    Exact ties are resolved by the lowest stored-set mean hardness; any
    remaining tie falls to the lowest view index.
    """
    h = np.asarray(tth.per_view, dtype=np.float64)
    means = np.asarray(dsel_mean_hardness, dtype=np.float64)
    if h.shape != means.shape:
        raise DataFormatError("hardness vector and per-view means differ in length")
    best = h.min()
    tied = np.flatnonzero(h == best)
    if len(tied) == 1:
        return ViewChoice(int(tied[0]), False, h.copy())
    tied_means = means[tied]
    chosen = int(tied[int(np.argmin(tied_means))])  # argmin takes lowest index on ties
    return ViewChoice(chosen, True, h.copy())


def hardness_statistics(hmatrix: HardnessMatrix) -> HardnessStats:
    """Cross-view dispersion per instance: range, population std, CV, and
    the ascending-sorted range profile."""
    scores = hmatrix.scores
    if scores.shape[1] < 2:
        raise DataFormatError("cross-view statistics need >=2 views")
    ranges = scores.max(axis=1) - scores.min(axis=1)
    stds = scores.std(axis=1)  # population
    stds[ranges == 0.0] = 0.0  # all-equal rows are exactly dispersion-free
    means = scores.mean(axis=1)
    zero_mean = means == 0.0
    cvs = np.zeros_like(means)
    nz = ~zero_mean
    cvs[nz] = stds[nz] / means[nz]
    return HardnessStats(
        ranges=ranges,
        stds=stds,
        cvs=cvs,
        zero_mean=zero_mean,
        range_profile=np.sort(ranges),
    )


# ---------------------------------------------------------------------------
# CSV / JSON export
# ---------------------------------------------------------------------------

def hardness_csv(hmatrix: HardnessMatrix, ids=None) -> str:
    """`instance_id,<view>...` rows, one per DSEL instance."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_id", *hmatrix.view_names])
    for pos, row_id in enumerate(hmatrix.row_ids):
        rid = ids[row_id] if ids is not None else str(int(row_id))
        writer.writerow([rid, *(repr(float(x)) for x in hmatrix.scores[pos])])
    return buf.getvalue()


def hardness_heatmap_csv(hmatrix: HardnessMatrix, ids=None) -> str:
    """Views as rows, instances as columns (heat-map layout)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["view"]
    for row_id in hmatrix.row_ids:
        header.append(ids[row_id] if ids is not None else str(int(row_id)))
    writer.writerow(header)
    for j, name in enumerate(hmatrix.view_names):
        writer.writerow([name, *(repr(float(x)) for x in hmatrix.scores[:, j])])
    return buf.getvalue()


def stats_csv(stats: HardnessStats, hmatrix: HardnessMatrix, ids=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_id", "range", "std", "cv", "zero_mean"])
    for pos, row_id in enumerate(hmatrix.row_ids):
        rid = ids[row_id] if ids is not None else str(int(row_id))
        writer.writerow([
            rid,
            repr(float(stats.ranges[pos])),
            repr(float(stats.stds[pos])),
            repr(float(stats.cvs[pos])),
            int(stats.zero_mean[pos]),
        ])
    return buf.getvalue()


def hardness_json(hmatrix: HardnessMatrix, stats: HardnessStats = None,
                  ids=None) -> str:
    """Plot-ready JSON: per-instance scores plus the cross-view statistics."""
    import json

    payload = {
        "k": hmatrix.k,
        "view_names": list(hmatrix.view_names),
        "instances": [
            ids[row_id] if ids is not None else str(int(row_id))
            for row_id in hmatrix.row_ids
        ],
        "scores": [[float(x) for x in row] for row in hmatrix.scores],
        "per_view_mean": [float(x) for x in hmatrix.per_view_mean],
    }
    if stats is not None:
        payload["stats"] = {
            "range": [float(x) for x in stats.ranges],
            "std": [float(x) for x in stats.stds],
            "cv": [float(x) for x in stats.cvs],
            "zero_mean": [bool(x) for x in stats.zero_mean],
            "range_profile": [float(x) for x in stats.range_profile],
        }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
