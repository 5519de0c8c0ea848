"""Native probabilistic base classifiers and the per-view pool grid.

Five kinds, all pure numpy and fully deterministic given (seed, data):
vote-fraction kNN, multinomial logistic regression (full-batch gradient
descent with backtracking line search), Gaussian naive Bayes, a
one-hidden-layer ReLU perceptron, and boosted depth-1 decision stumps.

Every fit z-scores features using training statistics stored in the model;
zero-variance features clamp std to 1.
"""

import io
import json
import zipfile
from dataclasses import dataclass, field

import numpy as np

from ._kernels import pairwise_sq_dists
from .data import DataFormatError, MultiViewDataset

KINDS = ("knn", "logistic_regression", "gaussian_nb", "perceptron_mlp",
         "decision_stump_boost")

_DEFAULT_HYPER = {
    "knn": {"k": 5},
    "logistic_regression": {"lam": 1e-3, "max_iter": 500, "tol": 1e-6},
    "gaussian_nb": {},
    "perceptron_mlp": {"hidden": 32, "epochs": 200, "lr": 0.01},
    "decision_stump_boost": {"rounds": 50},
}

GRID_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyper: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataFormatError(f"unknown classifier kind {self.kind!r}; know {KINDS}")
        unknown = set(self.hyper) - set(_DEFAULT_HYPER[self.kind])
        if unknown:
            raise DataFormatError(
                f"{self.kind}: unknown hyperparameters {sorted(unknown)}"
            )

    def resolved_hyper(self) -> dict:
        merged = dict(_DEFAULT_HYPER[self.kind])
        merged.update(self.hyper)
        return merged


def default_specs(seed: int = 0):
    """The standard five-kind pool, seeds offset per kind."""
    return [ClassifierSpec(kind, seed=seed + i) for i, kind in enumerate(KINDS)]


class TrainedClassifier:
    """A fitted model: ``predict_proba`` rows are non-negative and sum to 1."""

    def __init__(self, spec, view_name, num_classes, params):
        self.spec = spec
        self.view_name = view_name
        self.num_classes = num_classes
        self.params = params

    def _check_dim(self, X):
        if X.shape[1] != len(self.params["feat_mean"]):
            raise DataFormatError(
                f"{self.spec.kind} on view {self.view_name!r}: query dim "
                f"{X.shape[1]} != trained dim {len(self.params['feat_mean'])}"
            )

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self._check_dim(X)
        Z = (X - self.params["feat_mean"]) / self.params["feat_std"]
        return _PREDICT[self.spec.kind](self.params, Z, self.num_classes)

    def predict(self, X) -> np.ndarray:
        """Hard labels: argmax with lowest-index tie-break."""
        return np.argmax(self.predict_proba(X), axis=1)


@dataclass(frozen=True)
class ClassifierGrid:
    """Per-view pools: pools[v][m] trained with specs[m] on view v."""

    pools: tuple
    specs: tuple
    view_names: tuple
    num_classes: int

    @property
    def num_views(self) -> int:
        return len(self.pools)

    @property
    def pool_size(self) -> int:
        return len(self.specs)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _standardizer(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _one_hot(y, num_classes):
    out = np.zeros((len(y), num_classes))
    out[np.arange(len(y)), y] = 1.0
    return out


def _validate_fit_inputs(X, y, num_classes):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DataFormatError("X must be (n, d) with one label per row")
    if not np.isfinite(X).all():
        raise DataFormatError("non-finite features in training data")
    if len(np.unique(y)) < 2:
        raise DataFormatError("training data has a single class")
    if y.min() < 0 or y.max() >= num_classes:
        raise DataFormatError("labels outside [0, num_classes)")
    return X, y


# ---------------------------------------------------------------------------
# Logistic regression (multinomial, GD + backtracking line search)
# ---------------------------------------------------------------------------

def logistic_objective_grad(params_flat, X, Y, lam):
    """Mean cross-entropy + 0.5*lam*||W||^2 (bias unpenalized) and its gradient.

    ``params_flat`` packs W (d x L) row-major followed by b (L).
    """
    n, d = X.shape
    L = Y.shape[1]
    W = params_flat[: d * L].reshape(d, L)
    b = params_flat[d * L:]
    logits = X @ W + b
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    obj = -(Y * log_probs).sum() / n + 0.5 * lam * (W ** 2).sum()
    P = np.exp(log_probs)
    diff = (P - Y) / n
    grad_W = X.T @ diff + lam * W
    grad_b = diff.sum(axis=0)
    return obj, np.concatenate([grad_W.ravel(), grad_b])


def _fit_logistic_core(X, Y, lam, max_iter, tol):
    n, d = X.shape
    L = Y.shape[1]
    params = np.zeros(d * L + L)
    step = 1.0
    for _ in range(max_iter):
        obj, grad = logistic_objective_grad(params, X, Y, lam)
        gsq = float(grad @ grad)
        if np.sqrt(gsq) <= tol:
            break
        step = min(step * 2.0, 1e4)
        while step > 1e-14:
            cand = params - step * grad
            cand_obj, _ = logistic_objective_grad(cand, X, Y, lam)
            if cand_obj <= obj - 1e-4 * step * gsq:
                break
            step *= 0.5
        else:
            break  # no productive step left
        params = params - step * grad
    W = params[: d * L].reshape(d, L)
    b = params[d * L:]
    return W, b


def _fit_logistic(spec, X, y, num_classes, hyper):
    Y = _one_hot(y, num_classes)
    W, b = _fit_logistic_core(X, Y, hyper["lam"], hyper["max_iter"], hyper["tol"])
    return {"W": W, "b": b}


def _predict_logistic(params, Z, num_classes):
    return _softmax(Z @ params["W"] + params["b"])


# ---------------------------------------------------------------------------
# kNN
# ---------------------------------------------------------------------------

def _fit_knn(spec, X, y, num_classes, hyper):
    return {"points": X.copy(), "labels": y.copy(), "k": int(hyper["k"])}


def _predict_knn(params, Z, num_classes):
    points, labels = params["points"], params["labels"]
    k = min(params["k"], len(points))
    d2 = pairwise_sq_dists(Z, points)
    positions = np.arange(len(points))
    out = np.zeros((len(Z), num_classes))
    for i in range(len(Z)):
        order = np.lexsort((positions, d2[i]))[:k]
        votes = np.bincount(labels[order], minlength=num_classes)
        out[i] = votes / k
    return out


# ---------------------------------------------------------------------------
# Gaussian naive Bayes
# ---------------------------------------------------------------------------

def _fit_gaussian_nb(spec, X, y, num_classes, hyper):
    n, d = X.shape
    means = np.zeros((num_classes, d))
    variances = np.ones((num_classes, d))
    log_priors = np.full(num_classes, -np.inf)
    eps = 1e-9 * max(X.var(axis=0).max(), 1e-12)
    for c in range(num_classes):
        mask = y == c
        if not mask.any():
            continue
        log_priors[c] = np.log(mask.sum() / n)
        means[c] = X[mask].mean(axis=0)
        variances[c] = X[mask].var(axis=0) + eps
    return {"log_priors": log_priors, "means": means, "variances": variances}


def _predict_gaussian_nb(params, Z, num_classes):
    lp, mu, var = params["log_priors"], params["means"], params["variances"]
    # (n, L): log prior + sum over features of log N(z; mu, var)
    joint = np.empty((len(Z), num_classes))
    for c in range(num_classes):
        if not np.isfinite(lp[c]):
            joint[:, c] = -np.inf
            continue
        ll = -0.5 * (np.log(2.0 * np.pi * var[c]) + (Z - mu[c]) ** 2 / var[c]).sum(axis=1)
        joint[:, c] = lp[c] + ll
    finite_max = np.max(np.where(np.isfinite(joint), joint, -np.inf), axis=1, keepdims=True)
    e = np.exp(joint - finite_max)
    e[~np.isfinite(joint)] = 0.0
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# One-hidden-layer perceptron
# ---------------------------------------------------------------------------

def _fit_perceptron_mlp(spec, X, y, num_classes, hyper):
    n, d = X.shape
    hidden, epochs, lr = hyper["hidden"], hyper["epochs"], hyper["lr"]
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0x3A7]))
    W1 = rng.uniform(-0.1, 0.1, size=(d, hidden))
    b1 = np.zeros(hidden)
    # Output layer starts at zero: class-symmetric, no hidden class bias.
    W2 = np.zeros((hidden, num_classes))
    b2 = np.zeros(num_classes)
    Y = _one_hot(y, num_classes)
    for _ in range(epochs):
        H_pre = X @ W1 + b1
        H = np.maximum(H_pre, 0.0)
        P = _softmax(H @ W2 + b2)
        dlogits = (P - Y) / n
        dW2 = H.T @ dlogits
        db2 = dlogits.sum(axis=0)
        dH = dlogits @ W2.T
        dH[H_pre <= 0.0] = 0.0
        dW1 = X.T @ dH
        db1 = dH.sum(axis=0)
        W2 -= lr * dW2
        b2 -= lr * db2
        W1 -= lr * dW1
        b1 -= lr * db1
    return {"W1": W1, "b1": b1, "W2": W2, "b2": b2}


def _predict_perceptron_mlp(params, Z, num_classes):
    H = np.maximum(Z @ params["W1"] + params["b1"], 0.0)
    return _softmax(H @ params["W2"] + params["b2"])


# ---------------------------------------------------------------------------
# Boosted decision stumps (SAMME)
# ---------------------------------------------------------------------------

def _best_stump(X, y, w, num_classes):
    """Cheapest weighted-error axis-aligned stump; deterministic scan order
    (feature ascending, threshold ascending, first strict improvement)."""
    n, d = X.shape
    best = None  # (err, feature, threshold, class_left, class_right)
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        ws = w[order]
        cum = np.zeros((n + 1, num_classes))
        np.add.at(cum[1:], (np.arange(n), ys), ws)
        cum = np.cumsum(cum, axis=0)  # cum[i] = per-class weight of first i sorted points
        total = cum[-1]
        distinct = np.flatnonzero(xs[1:] > xs[:-1])  # split after sorted position i
        for i in distinct:
            left = cum[i + 1]
            right = total - left
            cl = int(np.argmax(left))
            cr = int(np.argmax(right))
            err = 1.0 - (left[cl] + right[cr])
            if best is None or err < best[0]:
                thr = 0.5 * (xs[i] + xs[i + 1])
                best = (err, f, thr, cl, cr)
    return best


def _fit_decision_stump_boost(spec, X, y, num_classes, hyper):
    n = len(y)
    rounds = hyper["rounds"]
    w = np.full(n, 1.0 / n)
    feats, thrs, cls_l, cls_r, alphas = [], [], [], [], []
    chance = 1.0 - 1.0 / num_classes
    for _ in range(rounds):
        found = _best_stump(X, y, w, num_classes)
        if found is None:
            break
        err, f, thr, cl, cr = found
        if err >= chance - 1e-12:
            break
        pred = np.where(X[:, f] <= thr, cl, cr)
        err = max(err, 1e-12)
        alpha = np.log((1.0 - err) / err) + np.log(max(num_classes - 1, 1))
        feats.append(f)
        thrs.append(thr)
        cls_l.append(cl)
        cls_r.append(cr)
        alphas.append(alpha)
        if err <= 1e-12:
            break
        w = w * np.exp(alpha * (pred != y))
        w = w / w.sum()
    counts = np.bincount(y, minlength=num_classes).astype(np.float64)
    params = {
        "features": np.array(feats, dtype=np.int64),
        "thresholds": np.array(thrs, dtype=np.float64),
        "class_left": np.array(cls_l, dtype=np.int64),
        "class_right": np.array(cls_r, dtype=np.int64),
        "alphas": np.array(alphas, dtype=np.float64),
        "prior": counts / counts.sum(),
    }
    return params


def _predict_decision_stump_boost(params, Z, num_classes):
    if len(params["alphas"]) == 0:
        return np.tile(params["prior"], (len(Z), 1))
    votes = np.zeros((len(Z), num_classes))
    for f, thr, cl, cr, a in zip(params["features"], params["thresholds"],
                                 params["class_left"], params["class_right"],
                                 params["alphas"]):
        left = Z[:, f] <= thr
        votes[left, cl] += a
        votes[~left, cr] += a
    return votes / votes.sum(axis=1, keepdims=True)


_FIT = {
    "knn": _fit_knn,
    "logistic_regression": _fit_logistic,
    "gaussian_nb": _fit_gaussian_nb,
    "perceptron_mlp": _fit_perceptron_mlp,
    "decision_stump_boost": _fit_decision_stump_boost,
}

_PREDICT = {
    "knn": _predict_knn,
    "logistic_regression": _predict_logistic,
    "gaussian_nb": _predict_gaussian_nb,
    "perceptron_mlp": _predict_perceptron_mlp,
    "decision_stump_boost": _predict_decision_stump_boost,
}


def fit(spec: ClassifierSpec, X, y, num_classes: int,
        view_name: str = "") -> TrainedClassifier:
    """Fit one classifier on raw features (z-scored internally)."""
    X, y = _validate_fit_inputs(X, y, num_classes)
    mean, std = _standardizer(X)
    Z = (X - mean) / std
    params = _FIT[spec.kind](spec, Z, y, num_classes, spec.resolved_hyper())
    params["feat_mean"] = mean
    params["feat_std"] = std
    return TrainedClassifier(spec, view_name, num_classes, params)


def fit_grid(dataset: MultiViewDataset, train_indices, specs) -> ClassifierGrid:
    """Fit every (view, spec) pair on the same training rows."""
    if not specs:
        raise DataFormatError("specs must be non-empty")
    train_indices = np.asarray(train_indices, dtype=np.int64)
    y = dataset.labels[train_indices]
    pools = []
    for view in dataset.views:
        X = np.asarray(view.data[train_indices], dtype=np.float64)
        pools.append(tuple(
            fit(spec, X, y, dataset.num_classes, view_name=view.name)
            for spec in specs
        ))
    return ClassifierGrid(
        pools=tuple(pools),
        specs=tuple(specs),
        view_names=tuple(dataset.view_names),
        num_classes=dataset.num_classes,
    )


# ---------------------------------------------------------------------------
# Grid archive: zip with a JSON manifest + one .npz parameter block per model
# ---------------------------------------------------------------------------

_EPOCH = (1980, 1, 1, 0, 0, 0)  # fixed zip timestamps keep archives reproducible


def save_grid(grid: ClassifierGrid, path) -> None:
    manifest = {
        "format_version": GRID_FORMAT_VERSION,
        "num_classes": grid.num_classes,
        "view_names": list(grid.view_names),
        "specs": [
            {"kind": s.kind, "hyper": s.hyper, "seed": s.seed} for s in grid.specs
        ],
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo("manifest.json", date_time=_EPOCH)
        zf.writestr(info, json.dumps(manifest, sort_keys=True, indent=2))
        for v, pool in enumerate(grid.pools):
            for m, model in enumerate(pool):
                buf = io.BytesIO()
                np.savez(buf, **model.params)
                info = zipfile.ZipInfo(f"params/{v:03d}_{m:03d}.npz", date_time=_EPOCH)
                zf.writestr(info, buf.getvalue())


def load_grid(path) -> ClassifierGrid:
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != GRID_FORMAT_VERSION:
            raise DataFormatError(
                f"{path}: unsupported grid format version {manifest.get('format_version')}"
            )
        specs = tuple(
            ClassifierSpec(s["kind"], dict(s["hyper"]), int(s["seed"]))
            for s in manifest["specs"]
        )
        view_names = tuple(manifest["view_names"])
        num_classes = int(manifest["num_classes"])
        pools = []
        for v, view_name in enumerate(view_names):
            pool = []
            for m, spec in enumerate(specs):
                blob = io.BytesIO(zf.read(f"params/{v:03d}_{m:03d}.npz"))
                with np.load(blob) as npz:
                    params = {key: npz[key].copy() for key in npz.files}
                for key in ("k",):
                    if key in params and params[key].ndim == 0:
                        params[key] = int(params[key])
                pool.append(TrainedClassifier(spec, view_name, num_classes, params))
            pools.append(tuple(pool))
    return ClassifierGrid(pools=tuple(pools), specs=specs, view_names=view_names,
                          num_classes=num_classes)
