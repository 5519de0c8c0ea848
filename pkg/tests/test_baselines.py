import numpy as np
import pytest

from dres.baselines import (build_group, fit_stacked, oracle_predictions)
from dres.classifiers import ClassifierSpec, default_specs, fit_grid
from dres.data import DataFormatError, ViewMatrix, assemble_dataset, make_splits
from dres.selection import build_fold_state
from dres.harness import _query_vectors, compute_metrics


def _dataset(n=80, views=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.array([0, 1] * (n // 2))
    vs = []
    for j in range(views):
        centers = rng.normal(0, 5, size=(2, 3))
        vs.append(ViewMatrix(f"v{j}", centers[labels] + rng.normal(0, 1.1, (n, 3))))
    return assemble_dataset(vs, labels)


def _grid(ds, specs=None, seed=0):
    specs = specs or default_specs(seed)
    return fit_grid(ds, np.arange(ds.num_instances), specs)


def test_group_sizes():
    ds = _dataset(views=3)
    grid = _grid(ds)
    assert len(build_group(grid, "A", 1)) == 3
    assert len(build_group(grid, "B", 0)) == 5
    assert len(build_group(grid, "C")) == 15


def test_group_bad_index():
    grid = _grid(_dataset())
    with pytest.raises(DataFormatError):
        build_group(grid, "A", 99)
    with pytest.raises(DataFormatError):
        build_group(grid, "B", -1)
    with pytest.raises(DataFormatError):
        build_group(grid, "D")


def test_meta_input_width():
    ds = _dataset(views=3)
    specs = default_specs(0)
    grid = fit_grid(ds, np.arange(ds.num_instances), specs)
    members = build_group(grid, "C")
    stacked = fit_stacked(ds, specs, members, np.arange(ds.num_instances), seed=1)
    assert stacked.meta_W.shape[0] == len(members) * ds.num_classes == 30


def test_stacked_perfect_member():
    """A member whose posteriors equal the one-hot truth drives the stack to
    perfect train-distribution accuracy."""
    rng = np.random.default_rng(3)
    labels = np.array([0, 1] * 40)
    # feature 0 IS the label with a wide margin; knn k=1 recovers it exactly
    pts = np.column_stack([labels * 10.0, rng.normal(size=80)])
    ds = assemble_dataset([ViewMatrix("v0", pts)], labels)
    specs = [ClassifierSpec("knn", {"k": 1}, seed=0)]
    grid = fit_grid(ds, np.arange(80), specs)
    stacked = fit_stacked(ds, specs, [(0, 0)], np.arange(80), seed=2)
    probes = np.column_stack([np.array([0, 1] * 10) * 10.0,
                              rng.normal(size=20)])
    preds = [stacked.predict([probes[i]]) for i in range(20)]
    assert preds == [0, 1] * 10


def test_stacked_duplicate_members_match_single():
    ds = _dataset(n=60, views=1, seed=5)
    specs = [ClassifierSpec("gaussian_nb", seed=0)]
    single = fit_stacked(ds, specs, [(0, 0)], np.arange(60), seed=3)
    double = fit_stacked(ds, specs, [(0, 0), (0, 0)], np.arange(60), seed=3)
    rng = np.random.default_rng(1)
    for _ in range(20):
        q = [rng.normal(size=3)]
        assert single.predict(q) == double.predict(q)


def test_stacked_inner_fold_degeneracy():
    rng = np.random.default_rng(2)
    labels = np.array([0] * 59 + [1] * 1)
    pts = rng.normal(size=(60, 2)) + labels[:, None]
    ds = assemble_dataset([ViewMatrix("v", pts)], labels)
    specs = [ClassifierSpec("gaussian_nb", seed=0)]
    with pytest.raises(DataFormatError, match="degenerate"):
        # the single minority instance leaves its level-0 split one-class
        fit_stacked(ds, specs, [(0, 0)], np.arange(60), inner_folds=4, seed=0)


def _fold_state(ds, seed=0, specs=None):
    plan = make_splits(ds, folds=2, dsel_fraction=0.35, seed=seed)
    fold = plan.folds[0]
    specs = specs or default_specs(seed)[:3]
    grid = fit_grid(ds, fold.train, specs)
    return fold, build_fold_state(ds, grid, fold.dsel)


def test_oracle_dominance_chain():
    for seed in range(3):
        ds = _dataset(n=90, views=2, seed=seed)
        fold, state = _fold_state(ds, seed=seed)
        pipe, repr_preds, full_preds = oracle_predictions(fold.test, state, "knora_e")
        truths = ds.labels[fold.test]
        acc = lambda p: (p == truths).mean()
        assert acc(full_preds) >= acc(repr_preds) >= acc(pipe)


def test_oracle_counts_any_correct_view():
    ds = _dataset(n=90, views=2, seed=7)
    fold, state = _fold_state(ds, seed=7)
    from dres.selection import stage2_predict, dres_predict
    pipe, repr_preds, _ = oracle_predictions(fold.test, state, "knora_e")
    for qi, row in enumerate(fold.test):
        vecs = _query_vectors(ds, row)
        any_right = any(
            stage2_predict(state, v, vecs[v], "knora_e")[0] == ds.labels[row]
            for v in range(2))
        if any_right:
            assert repr_preds[qi] == ds.labels[row]
        else:
            assert repr_preds[qi] == pipe[qi]


def test_oracle_single_view_matches_pipeline():
    """With one view the representation oracle degenerates to the pipeline
    outcome whenever the pipeline is wrong, and to the truth when right."""
    ds = _dataset(n=80, views=1, seed=9)
    fold, state = _fold_state(ds, seed=9)
    pipe, repr_preds, _ = oracle_predictions(fold.test, state, "knora_e")
    truths = ds.labels[fold.test]
    np.testing.assert_array_equal(repr_preds == truths, pipe == truths)
    assert (pipe == truths).mean() == (repr_preds == truths).mean()


def test_oracle_full_with_memorizing_member():
    """A 1-NN member makes the full oracle perfect on queries duplicated in
    training data."""
    rng = np.random.default_rng(4)
    labels = np.array([0, 1] * 30)
    pts = rng.normal(size=(60, 2)) + labels[:, None] * 0.2  # heavy overlap
    ds = assemble_dataset([ViewMatrix("v", pts)], labels)
    specs = [ClassifierSpec("knn", {"k": 1}, seed=0),
             ClassifierSpec("gaussian_nb", seed=1)]
    grid = fit_grid(ds, np.arange(60), specs)
    state = build_fold_state(ds, grid, np.arange(60))
    # queries are training rows themselves; 1-NN (self included) memorizes
    _, _, full_preds = oracle_predictions(np.arange(20), state, "knora_e")
    assert (full_preds == ds.labels[:20]).all()
