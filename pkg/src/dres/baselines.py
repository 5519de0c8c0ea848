"""Static stacked-generalization baselines (Groups A, B, C) and the two
per-instance oracle upper bounds.

Group A fixes one classifier kind across all views, Group B one view with
all kinds, Group C takes the full grid. Members are combined by a logistic
meta-classifier fitted on out-of-fold level-0 posteriors, so no meta-training
row ever sees a posterior from a model trained on it.
"""

from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierGrid, _fit_logistic_core, _one_hot, _softmax, fit
from .data import DataFormatError, MultiViewDataset
from .selection import FoldState, dres_predict, stage2_predict

GROUPS = ("A", "B", "C")


def build_group(grid: ClassifierGrid, group: str, fixed_index: int = None):
    """Member keys (view_idx, spec_idx) for a baseline group.

    A: one classifier kind (``fixed_index`` picks the spec) across all views.
    B: all kinds on one view (``fixed_index`` picks the view).
    C: every (view, kind) pair.
    """
    n, m = grid.num_views, grid.pool_size
    if group == "A":
        if fixed_index is None or not 0 <= fixed_index < m:
            raise DataFormatError(f"group A needs a spec index in [0, {m})")
        return [(v, fixed_index) for v in range(n)]
    if group == "B":
        if fixed_index is None or not 0 <= fixed_index < n:
            raise DataFormatError(f"group B needs a view index in [0, {n})")
        return [(fixed_index, s) for s in range(m)]
    if group == "C":
        return [(v, s) for v in range(n) for s in range(m)]
    raise DataFormatError(f"unknown group {group!r}; know {GROUPS}")


@dataclass(frozen=True)
class StackedEnsemble:
    members: tuple                # (view_idx, spec_idx) keys
    level0: tuple                 # models refitted on the full training rows
    meta_W: np.ndarray
    meta_b: np.ndarray
    num_classes: int

    def predict_proba(self, query_vecs) -> np.ndarray:
        feats = np.concatenate([
            self.level0[i].predict_proba(query_vecs[v])[0]
            for i, (v, s) in enumerate(self.members)
        ])
        return _softmax(feats[None, :] @ self.meta_W + self.meta_b)[0]

    def predict(self, query_vecs) -> int:
        return int(np.argmax(self.predict_proba(query_vecs)))


def _stratified_folds(y, folds, rng):
    assign = np.empty(len(y), dtype=np.int64)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        for f in range(folds):
            assign[idx[f::folds]] = f
    return assign


def fit_stacked(dataset: MultiViewDataset, specs, members, train_indices,
                inner_folds: int = 4, seed: int = 0) -> StackedEnsemble:
    """Stack the given members: out-of-fold level-0 posteriors feed the
    logistic meta-classifier; level-0 models are refitted on all of
    ``train_indices`` for inference."""
    train_indices = np.asarray(train_indices, dtype=np.int64)
    y = dataset.labels[train_indices]
    L = dataset.num_classes
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x57AC]))
    assign = _stratified_folds(y, inner_folds, rng)
    for f in range(inner_folds):
        held = y[assign == f]
        fit_part = y[assign != f]
        if len(np.unique(fit_part)) < L or len(held) == 0:
            raise DataFormatError(
                f"inner fold {f} degenerate: a class is missing from the level-0 split"
            )

    meta_X = np.full((len(train_indices), len(members) * L), np.nan)
    seen_fold = np.full(len(train_indices), -1, dtype=np.int64)
    for f in range(inner_folds):
        tr_rows = np.flatnonzero(assign != f)
        va_rows = np.flatnonzero(assign == f)
        tr_idx = train_indices[tr_rows]
        va_idx = train_indices[va_rows]
        for i, (v, s) in enumerate(members):
            view = dataset.views[v]
            model = fit(specs[s], view.data[tr_idx].astype(np.float64),
                        dataset.labels[tr_idx], L, view_name=view.name)
            meta_X[va_rows, i * L:(i + 1) * L] = model.predict_proba(
                view.data[va_idx].astype(np.float64))
        seen_fold[va_rows] = f
    # Leak check: every meta row was produced by the fold that held it out.
    assert (seen_fold == assign).all() and np.isfinite(meta_X).all()

    W, b = _fit_logistic_core(meta_X, _one_hot(y, L), lam=1e-3, max_iter=500,
                              tol=1e-6)
    level0 = tuple(
        fit(specs[s], dataset.views[v].data[train_indices].astype(np.float64),
            y, L, view_name=dataset.views[v].name)
        for (v, s) in members
    )
    return StackedEnsemble(members=tuple(members), level0=level0, meta_W=W,
                           meta_b=b, num_classes=L)


# ---------------------------------------------------------------------------
# Oracle upper bounds
# ---------------------------------------------------------------------------

def oracle_predictions(test_indices, state: FoldState, method: str,
                       k: int = None):
    """Best-case outcome vectors for the two oracles.

    Representation oracle: correct iff any view's stage-2 DES prediction is
    correct. Full oracle: correct iff any single classifier in any view is
    correct. Wrong-everywhere queries keep the actual pipeline prediction
    (so both bounds dominate the pipeline by construction).
    """
    test_indices = np.asarray(test_indices, dtype=np.int64)
    labels = state.dataset.labels
    n_views = state.num_views
    repr_preds = np.empty(len(test_indices), dtype=np.int64)
    full_preds = np.empty(len(test_indices), dtype=np.int64)
    pipeline_preds = np.empty(len(test_indices), dtype=np.int64)
    for qi, row in enumerate(test_indices):
        vecs = [np.asarray(v.data[row], dtype=np.float64) for v in state.dataset.views]
        outcome = dres_predict(vecs, state, method, k)
        pipeline_preds[qi] = outcome.label
        truth = labels[row]

        repr_hit = False
        for vdx in range(n_views):
            label, _ = stage2_predict(state, vdx, vecs[vdx], method, k)
            if label == truth:
                repr_hit = True
                break
        repr_preds[qi] = truth if repr_hit else outcome.label

        full_hit = False
        for vdx in range(n_views):
            for clf in state.grid.pools[vdx]:
                if int(np.argmax(clf.predict_proba(vecs[vdx])[0])) == truth:
                    full_hit = True
                    break
            if full_hit:
                break
        full_preds[qi] = truth if full_hit else outcome.label
    return pipeline_preds, repr_preds, full_preds


def oracle_representation(test_indices, state: FoldState, method: str,
                          k: int = None) -> np.ndarray:
    _, repr_preds, _ = oracle_predictions(test_indices, state, method, k)
    return repr_preds


def oracle_full(test_indices, state: FoldState, method: str = "knora_e",
                k: int = None) -> np.ndarray:
    _, _, full_preds = oracle_predictions(test_indices, state, method, k)
    return full_preds
