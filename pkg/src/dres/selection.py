"""Dynamic ensemble selection inside the chosen view: KNORA-E, DES-P, a
meta-learned competence selector, and majority-vote combination, plus the
per-fold state object that the end-to-end per-query prediction runs against.

Every selector is total: when its rule selects nobody, it falls back to the
full pool and flags it.
"""

from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierGrid, _fit_logistic_core, _one_hot, _softmax
from .data import DataFormatError, MultiViewDataset
from .hardness import (HardnessMatrix, TestTimeHardness, ViewChoice,
                       build_hardness_matrix, estimate_test_hardness, select_view)
from .knn import build_index, query

METHODS = ("knora_e", "des_p", "meta_des")


@dataclass(frozen=True)
class RegionOfCompetence:
    neighbor_ids: np.ndarray      # k DSEL row indices, nearest first
    neighbor_labels: np.ndarray
    correct: np.ndarray           # (m, k) bool: argmax posterior == DSEL label
    posteriors: np.ndarray        # (m, k, L)


@dataclass(frozen=True)
class SelectedEnsemble:
    indices: tuple                # classifier positions within the view pool
    method: str
    fallback_used: bool


@dataclass(frozen=True)
class PredictOutcome:
    label: int
    view_choice: ViewChoice
    ensemble: SelectedEnsemble
    test_hardness: TestTimeHardness


class MetaClassifier:
    """Predicts P(classifier is correct on the query) from k+3 meta-features.

    Degenerate meta-datasets (all targets identical) collapse to a constant
    predictor that records the prior.
    """

    def __init__(self, W=None, b=None, prior=None):
        self.W = W
        self.b = b
        self.prior = prior

    @property
    def constant(self) -> bool:
        return self.W is None

    def competence(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(features)
        if self.constant:
            return np.full(len(features), self.prior)
        return _softmax(features @ self.W + self.b)[:, 1]


def _meta_features(correct_bits, posteriors, true_labels, query_conf):
    """One row per classifier: k correctness bits, local accuracy, query
    posterior confidence, mean posterior mass on the true neighbor labels."""
    m, k = correct_bits.shape
    bits = correct_bits.astype(np.float64)
    local_acc = bits.mean(axis=1)
    true_post = posteriors[:, np.arange(k), true_labels].mean(axis=1)
    return np.column_stack([bits, local_acc, np.asarray(query_conf), true_post])


def build_roc(query_vec, index, pool, labels, view, k,
              posteriors=None, correct=None) -> RegionOfCompetence:
    """Region of competence: the query's k nearest DSEL neighbors plus each
    pool member's correctness and posteriors on them.

    ``posteriors``/``correct`` are the optional precomputed DSEL caches
    (keyed by index position); without them the pool re-predicts the
    neighbor rows directly.
    """
    nl = query(index, query_vec, k)
    ids = nl.indices
    neigh_labels = labels[ids]
    if posteriors is not None:
        pos = np.array([index._by_id[int(i)] for i in ids])
        post = posteriors[:, pos, :]
        corr = correct[:, pos]
    else:
        X = np.asarray(view.data[ids], dtype=np.float64)
        post = np.stack([clf.predict_proba(X) for clf in pool])
        corr = post.argmax(axis=2) == neigh_labels[None, :]
    return RegionOfCompetence(
        neighbor_ids=ids,
        neighbor_labels=neigh_labels,
        correct=corr,
        posteriors=post,
    )


def knora_e(roc: RegionOfCompetence) -> SelectedEnsemble:
    """Keep classifiers correct on every neighbor; on an empty pick, shrink
    the neighborhood to the nearest k-1, k-2, ... 1; then full-pool fallback."""
    m, k = roc.correct.shape
    for kk in range(k, 0, -1):
        sel = np.flatnonzero(roc.correct[:, :kk].all(axis=1))
        if sel.size:
            return SelectedEnsemble(tuple(int(i) for i in sel), "knora_e", False)
    return SelectedEnsemble(tuple(range(m)), "knora_e", True)


def des_p(roc: RegionOfCompetence, num_classes: int) -> SelectedEnsemble:
    """Keep classifiers whose local accuracy strictly beats random guessing."""
    m = roc.correct.shape[0]
    acc = roc.correct.mean(axis=1)
    sel = np.flatnonzero(acc > 1.0 / num_classes)
    if sel.size:
        return SelectedEnsemble(tuple(int(i) for i in sel), "des_p", False)
    return SelectedEnsemble(tuple(range(m)), "des_p", True)


def meta_training_rows(pool, view, index, labels, k,
                       posteriors=None, correct=None):
    """Leave-one-out meta-dataset: one (meta-features, is-correct) row per
    (DSEL instance, classifier) pair, |DSEL| x m rows in total."""
    dsel_ids = index.ids
    n, m = len(dsel_ids), len(pool)
    if posteriors is None:
        X_dsel = np.asarray(view.data[dsel_ids], dtype=np.float64)
        posteriors = np.stack([clf.predict_proba(X_dsel) for clf in pool])
        correct = posteriors.argmax(axis=2) == labels[dsel_ids][None, :]
    rows = np.empty((n * m, k + 3))
    targets = np.empty(n * m, dtype=np.int64)
    for i, row_id in enumerate(dsel_ids):
        vec = np.asarray(view.data[row_id], dtype=np.float64)
        nl = query(index, vec, k, exclude_self=int(row_id))
        pos = np.array([index._by_id[int(x)] for x in nl.indices])
        bits = correct[:, pos]
        post = posteriors[:, pos, :]
        own_pos = index._by_id[int(row_id)]
        conf = posteriors[:, own_pos, :].max(axis=1)
        feats = _meta_features(bits, post, labels[nl.indices], conf)
        rows[i * m:(i + 1) * m] = feats
        targets[i * m:(i + 1) * m] = correct[:, own_pos]
    return rows, targets


def meta_des_train(pool, view, index, labels, k,
                   posteriors=None, correct=None) -> MetaClassifier:
    """Fit the competence meta-classifier from leave-one-out DSEL regions."""
    rows, targets = meta_training_rows(pool, view, index, labels, k,
                                       posteriors=posteriors, correct=correct)
    if targets.min() == targets.max():
        return MetaClassifier(prior=float(targets[0]))
    W, b = _fit_logistic_core(rows, _one_hot(targets, 2), lam=1e-3,
                              max_iter=500, tol=1e-6)
    return MetaClassifier(W=W, b=b)


def meta_des_select(meta: MetaClassifier, roc: RegionOfCompetence,
                    query_posteriors: np.ndarray) -> SelectedEnsemble:
    """Keep classifiers whose predicted competence exceeds 0.5."""
    conf = query_posteriors.max(axis=1)
    feats = _meta_features(roc.correct, roc.posteriors, roc.neighbor_labels, conf)
    competence = meta.competence(feats)
    sel = np.flatnonzero(competence > 0.5)
    if sel.size:
        return SelectedEnsemble(tuple(int(i) for i in sel), "meta_des", False)
    return SelectedEnsemble(tuple(range(len(conf))), "meta_des", True)


def majority_vote(selected: SelectedEnsemble, query_posteriors: np.ndarray) -> int:
    """Plurality over the selected classifiers' hard labels; ties resolved by
    the larger summed posterior among the tied classes, then lowest index."""
    if not selected.indices:
        raise DataFormatError("cannot vote with an empty ensemble")
    posts = query_posteriors[list(selected.indices)]
    votes = posts.argmax(axis=1)
    counts = np.bincount(votes, minlength=query_posteriors.shape[1])
    top = counts.max()
    tied = np.flatnonzero(counts == top)
    if len(tied) == 1:
        return int(tied[0])
    sums = posts[:, tied].sum(axis=0)
    return int(tied[int(np.argmax(sums))])


# ---------------------------------------------------------------------------
# Per-fold state and the end-to-end per-query pipeline
# ---------------------------------------------------------------------------

class FoldState:
    """Everything the per-query pipeline needs, built once per fold and
    immutable afterwards: DSEL indexes, the hardness matrix, cached pool
    posteriors over DSEL, and (optionally) per-view meta-classifiers."""

    def __init__(self, dataset, grid, indexes, hmatrix, dsel_posteriors,
                 dsel_correct, metas, k_hardness, k_roc):
        self.dataset = dataset
        self.grid = grid
        self.indexes = indexes
        self.hmatrix = hmatrix
        self.dsel_mean_hardness = hmatrix.per_view_mean
        self.dsel_posteriors = dsel_posteriors
        self.dsel_correct = dsel_correct
        self.metas = metas
        self.k_hardness = k_hardness
        self.k_roc = k_roc

    @property
    def num_views(self):
        return len(self.indexes)


def build_fold_state(dataset: MultiViewDataset, grid: ClassifierGrid,
                     dsel_indices, k_hardness: int = 5, k_roc: int = 5,
                     standardize: bool = True, with_meta: bool = False) -> FoldState:
    dsel_indices = np.asarray(sorted(int(i) for i in dsel_indices), dtype=np.int64)
    indexes = [build_index(v, dsel_indices, standardize=standardize)
               for v in dataset.views]
    hmatrix = build_hardness_matrix(dataset, dsel_indices, k_hardness,
                                    standardize=standardize)
    posteriors, correct = [], []
    for view, pool in zip(dataset.views, grid.pools):
        X = np.asarray(view.data[dsel_indices], dtype=np.float64)
        post = np.stack([clf.predict_proba(X) for clf in pool])
        posteriors.append(post)
        correct.append(post.argmax(axis=2) == dataset.labels[dsel_indices][None, :])
    metas = None
    if with_meta:
        metas = [
            meta_des_train(pool, view, index, dataset.labels, k_roc,
                           posteriors=post, correct=corr)
            for pool, view, index, post, corr in zip(
                grid.pools, dataset.views, indexes, posteriors, correct)
        ]
    return FoldState(dataset, grid, indexes, hmatrix, posteriors, correct,
                     metas, k_hardness, k_roc)


def stage2_predict(state: FoldState, view_idx: int, query_vec, method: str,
                   k: int = None):
    """DES + vote within one fixed view; returns (label, ensemble)."""
    k = k or state.k_roc
    pool = state.grid.pools[view_idx]
    roc = build_roc(query_vec, state.indexes[view_idx], pool,
                    state.dataset.labels, state.dataset.views[view_idx], k,
                    posteriors=state.dsel_posteriors[view_idx],
                    correct=state.dsel_correct[view_idx])
    query_posts = np.vstack([clf.predict_proba(query_vec)[0] for clf in pool])
    if method == "knora_e":
        sel = knora_e(roc)
    elif method == "des_p":
        sel = des_p(roc, state.grid.num_classes)
    elif method == "meta_des":
        if state.metas is None:
            raise DataFormatError("fold state built without meta classifiers")
        sel = meta_des_select(state.metas[view_idx], roc, query_posts)
    else:
        raise DataFormatError(f"unknown DES method {method!r}; know {METHODS}")
    return majority_vote(sel, query_posts), sel


def dres_predict(query_vecs, state: FoldState, method: str,
                 k: int = None) -> PredictOutcome:
    """Full per-query pipeline: estimate per-view hardness, pick the easiest
    view, run stage-2 DES in it, and majority-vote the selected ensemble."""
    if len(query_vecs) != state.num_views:
        raise DataFormatError(
            f"got {len(query_vecs)} query vectors for {state.num_views} views"
        )
    tth = estimate_test_hardness(query_vecs, state.indexes, state.hmatrix,
                                 state.k_hardness)
    choice = select_view(tth, state.dsel_mean_hardness)
    label, sel = stage2_predict(state, choice.chosen_view,
                                query_vecs[choice.chosen_view], method, k)
    return PredictOutcome(label=label, view_choice=choice, ensemble=sel,
                          test_hardness=tth)
