import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dres.data import DataFormatError, ViewMatrix, assemble_dataset
from dres.hardness import (HardnessMatrix, TestTimeHardness, build_hardness_matrix,
                           compute_kdn, estimate_test_hardness, hardness_csv,
                           hardness_heatmap_csv, hardness_statistics, select_view)
from dres.knn import build_index
from dres.synthetic import two_region_dataset

from oracles import brute_force_kdn


def _view(points, name="v"):
    return ViewMatrix(name, np.asarray(points, dtype=np.float64))


def test_kdn_all_same_label_is_zero():
    pts = np.concatenate([np.zeros((6, 2)), np.full((6, 2), 10.0)])
    pts += np.arange(12)[:, None] * 0.01
    labels = np.array([0] * 6 + [1] * 6)
    col = compute_kdn(_view(pts), labels, np.arange(12), k=5)
    assert np.all(col == 0.0)


def test_kdn_two_of_five_disagree():
    # a target point whose 5 nearest neighbors carry exactly 2 other labels
    pts = np.array([[0.0, 0.0],
                    [0.1, 0.0], [0.0, 0.1], [-0.1, 0.0],   # same label
                    [0.0, -0.1], [0.15, 0.15],              # different label
                    [5.0, 5.0], [5.1, 5.0], [-5.0, -5.0], [-5.1, -5.0]])
    labels = np.array([0, 0, 0, 0, 1, 1, 1, 1, 0, 0])
    col = compute_kdn(_view(pts), labels, np.arange(10), k=5, standardize=False)
    assert col[0] == pytest.approx(2 / 5)


def test_kdn_matches_oracle_on_blobs():
    rng = np.random.default_rng(17)
    pts = np.concatenate([rng.normal(0, 1.2, size=(20, 2)),
                          rng.normal(2.0, 1.2, size=(20, 2))])
    labels = np.array([0] * 20 + [1] * 20)
    view = _view(pts)
    col = compute_kdn(view, labels, np.arange(40), k=5)
    oracle = brute_force_kdn(view.data, labels, k=5)
    np.testing.assert_array_equal(col, oracle)


def test_kdn_subset_too_small():
    with pytest.raises(DataFormatError, match="exceed k"):
        compute_kdn(_view(np.ones((4, 2))), np.array([0, 1, 0, 1]),
                    np.arange(4), k=5)


def test_hardness_matrix_single_view_equals_column():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(30, 3))
    labels = rng.integers(0, 2, size=30)
    labels[:2] = [0, 1]
    ds = assemble_dataset([_view(pts, "a")], labels)
    hm = build_hardness_matrix(ds, np.arange(30), k=3)
    col = compute_kdn(ds.views[0], labels, np.arange(30), k=3)
    assert hm.scores.shape == (30, 1)
    np.testing.assert_array_equal(hm.scores[:, 0], col)


def test_hardness_matrix_duplicate_views_identical_columns():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(25, 4))
    labels = np.array([0, 1] * 12 + [0])
    ds = assemble_dataset([_view(pts, "a"), _view(pts, "b")], labels)
    hm = build_hardness_matrix(ds, np.arange(25), k=5)
    np.testing.assert_array_equal(hm.scores[:, 0], hm.scores[:, 1])


def test_hardness_matrix_three_views_match_oracles():
    rng = np.random.default_rng(3)
    labels = np.array([0, 1] * 15)
    views = []
    for j in range(3):
        centers = rng.normal(0, 2 + j, size=(2, 2))
        views.append(_view(centers[labels] + rng.normal(0, 1, size=(30, 2)), f"v{j}"))
    ds = assemble_dataset(views, labels)
    subset = np.arange(30)
    hm = build_hardness_matrix(ds, subset, k=5)
    for j in range(3):
        oracle = brute_force_kdn(views[j].data, labels, k=5)
        np.testing.assert_array_equal(hm.scores[:, j], oracle)


def _toy_state(scores, pts, labels):
    view = _view(pts)
    index = build_index(view, standardize=False)
    hm = HardnessMatrix(scores=np.asarray(scores, dtype=np.float64),
                        k=5, view_names=("v",),
                        row_ids=np.arange(len(pts)))
    return view, index, hm


def test_estimate_seven_neighbor_mean():
    # seven neighbor scores summing to 1.82 average to 0.26
    scores = np.array([[0.1], [0.3], [0.2], [0.42], [0.5], [0.2], [0.1],
                       [0.9], [0.9]])
    assert scores[:7].sum() == pytest.approx(1.82)
    pts = np.column_stack([np.concatenate([np.arange(7.0), [50.0, 60.0]])])
    view, index, hm = _toy_state(scores, pts, None)
    tth = estimate_test_hardness([np.array([3.0])], [index], hm, k=7)
    assert tth.per_view[0] == pytest.approx(0.26, abs=1e-12)


def test_estimate_all_zero_scores():
    pts = np.arange(10.0)[:, None]
    view, index, hm = _toy_state(np.zeros((10, 1)), pts, None)
    tth = estimate_test_hardness([np.array([4.2])], [index], hm, k=5)
    assert tth.per_view[0] == 0.0


def test_estimate_matches_neighbor_oracle():
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(40, 3))
    scores = rng.integers(0, 6, size=(40, 1)) / 5.0
    view, index, hm = _toy_state(scores, pts, None)
    q = rng.normal(size=3)
    tth = estimate_test_hardness([q], [index], hm, k=7)
    from oracles import brute_force_knn
    idx, _ = brute_force_knn(view.data.astype(np.float64), q, 7)
    assert tth.per_view[0] == pytest.approx(scores[idx, 0].mean(), abs=1e-12)
    assert tth.neighbor_ids[0].tolist() == idx.tolist()


def test_select_view_argmin():
    tth = TestTimeHardness(per_view=np.array([0.26, 0.55, 0.70]),
                           neighbor_ids=(None, None, None))
    choice = select_view(tth, np.zeros(3))
    assert choice.chosen_view == 0 and not choice.tie_broken


def test_select_view_tie_breaks_by_mean():
    tth = TestTimeHardness(per_view=np.array([0.3, 0.3]), neighbor_ids=(None, None))
    choice = select_view(tth, np.array([0.41, 0.38]))
    assert choice.chosen_view == 1 and choice.tie_broken


def test_select_view_single_view():
    tth = TestTimeHardness(per_view=np.array([0.9]), neighbor_ids=(None,))
    assert select_view(tth, np.array([0.5])).chosen_view == 0


def test_select_view_full_tie_lowest_index():
    tth = TestTimeHardness(per_view=np.array([0.2, 0.2]), neighbor_ids=(None, None))
    choice = select_view(tth, np.array([0.4, 0.4]))
    assert choice.chosen_view == 0 and choice.tie_broken


def _stats_matrix(scores):
    scores = np.asarray(scores, dtype=np.float64)
    return HardnessMatrix(scores=scores, k=5,
                          view_names=tuple(f"v{j}" for j in range(scores.shape[1])),
                          row_ids=np.arange(len(scores)))


def test_stats_closed_form_row():
    stats = hardness_statistics(_stats_matrix([[0.1, 0.6, 0.9]]))
    assert stats.ranges[0] == pytest.approx(0.8)
    assert stats.stds[0] == pytest.approx(0.32998, abs=1e-4)
    assert stats.cvs[0] == pytest.approx(0.61871, abs=1e-4)


def test_stats_identical_columns():
    scores = np.tile(np.linspace(0, 1, 6)[:, None], (1, 3))
    stats = hardness_statistics(_stats_matrix(scores))
    assert np.all(stats.ranges == 0.0)
    assert np.all(stats.cvs == 0.0)


def test_stats_zero_mean_flagged():
    stats = hardness_statistics(_stats_matrix([[0.0, 0.0], [0.2, 0.4]]))
    assert stats.zero_mean[0] and not stats.zero_mean[1]
    assert stats.cvs[0] == 0.0


def test_stats_single_view_errors():
    with pytest.raises(DataFormatError, match=">=2 views"):
        hardness_statistics(_stats_matrix([[0.1], [0.2]]))


def test_stats_range_profile_sorted():
    stats = hardness_statistics(_stats_matrix([[0.0, 0.9], [0.1, 0.2], [0.5, 0.6]]))
    assert np.all(np.diff(stats.range_profile) >= 0)


def test_two_region_generator_hardness_variation():
    ds = two_region_dataset(n_instances=600, seed=4)
    hm = build_hardness_matrix(ds, np.arange(ds.num_instances), k=5)
    stats = hardness_statistics(hm)
    assert float((stats.ranges > 0.5).mean()) > 0.5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([3, 5, 7]))
def test_property_kdn_quantized(seed, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(k + 2, 40))
    pts = rng.normal(size=(n, 2))
    labels = rng.integers(0, 3, size=n)
    col = compute_kdn(_view(pts), labels, np.arange(n), k=k)
    np.testing.assert_array_equal(col * k, np.round(col * k))
    assert np.all((0 <= col) & (col <= 1))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_property_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    n = 30
    pts = rng.normal(size=(n, 3))
    labels = rng.integers(0, 2, size=n)
    labels[:2] = [0, 1]
    col = compute_kdn(_view(pts), labels, np.arange(n), k=5)
    perm = rng.permutation(n)
    col_p = compute_kdn(_view(pts[perm]), labels[perm], np.arange(n), k=5)
    np.testing.assert_array_equal(col[perm], col_p)


def test_scale_invariance_with_standardization():
    rng = np.random.default_rng(12)
    pts = rng.normal(size=(40, 3))
    labels = rng.integers(0, 2, size=40)
    labels[:2] = [0, 1]
    a = compute_kdn(_view(pts), labels, np.arange(40), k=5, standardize=True)
    b = compute_kdn(_view(pts * 37.5), labels, np.arange(40), k=5, standardize=True)
    np.testing.assert_array_equal(a, b)


def test_csv_exports_shape():
    hm = _stats_matrix([[0.2, 0.4], [0.0, 1.0]])
    text = hardness_csv(hm)
    lines = text.strip().split("\n")
    assert lines[0] == "instance_id,v0,v1"
    assert len(lines) == 3
    heat = hardness_heatmap_csv(hm).strip().split("\n")
    assert heat[0].startswith("view,")
    assert len(heat) == 3  # header + one row per view
