"""Cross-validation orchestration: fold execution, macro metrics, static
baselines and oracle bounds, the component ablation, the hardness-k sweep,
selection-frequency accounting, and deterministic report emission.

All randomness is derived from the config seed through fixed-purpose seed
sequences, so reports are byte-identical for identical (dataset, config)
regardless of thread count or fold execution order.
"""

import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .baselines import build_group, fit_stacked, oracle_predictions
from .classifiers import ClassifierSpec, default_specs, fit_grid
from .data import DataFormatError, MultiViewDataset, load_dataset, make_splits
from .hardness import (build_hardness_matrix, estimate_test_hardness,
                       hardness_statistics, select_view, stats_csv)
from .selection import (METHODS, SelectedEnsemble, build_fold_state,
                        dres_predict, majority_vote, stage2_predict)
from . import synthetic


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    views: list = None
    labels: str = None
    view_names: list = None
    synthetic: dict = None
    methods: tuple = ("knora_e", "des_p", "meta_des")
    specs: list = None
    folds: int = 5
    dsel_fraction: float = 0.25
    k: int = 5
    k_hardness: int = 5
    seed: int = 0
    standardize: bool = True
    baselines: tuple = ()
    oracles: bool = False
    ablation: bool = False
    output_dir: str = "out"
    threads: int = 1

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; know {METHODS}")
        if self.views is None and self.synthetic is None:
            raise ConfigError("config needs either view/label paths or a synthetic block")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def resolved_specs(self):
        if self.specs is None:
            return default_specs(self.seed)
        return list(self.specs)


def _parse_specs(raw, seed):
    out = []
    for i, entry in enumerate(raw):
        if isinstance(entry, str):
            out.append(ClassifierSpec(entry, seed=seed + i))
        else:
            out.append(ClassifierSpec(
                entry["kind"],
                dict(entry.get("hyper", {})),
                int(entry.get("seed", seed + i)),
            ))
    return out


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    seed = int(raw.get("seed", 0))
    specs = raw.pop("specs", None)
    cfg = ExperimentConfig(
        views=raw.get("views"),
        labels=raw.get("labels"),
        view_names=raw.get("view_names"),
        synthetic=raw.get("synthetic"),
        methods=tuple(raw.get("methods", ("knora_e", "des_p", "meta_des"))),
        specs=_parse_specs(specs, seed) if specs is not None else None,
        folds=int(raw.get("folds", 5)),
        dsel_fraction=float(raw.get("dsel_fraction", 0.25)),
        k=int(raw.get("k", 5)),
        k_hardness=int(raw.get("k_hardness", 5)),
        seed=seed,
        standardize=bool(raw.get("standardize", True)),
        baselines=tuple(raw.get("baselines", ())),
        oracles=bool(raw.get("oracles", False)),
        ablation=bool(raw.get("ablation", False)),
        output_dir=raw.get("output_dir", "out"),
        threads=int(raw.get("threads", 1)),
    )
    return cfg


def load_config(path) -> ExperimentConfig:
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        raw = json.loads(text)
    else:
        try:
            raw = tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a table/object")
    return config_from_dict(raw)


def load_config_dataset(config: ExperimentConfig) -> MultiViewDataset:
    if config.synthetic is not None:
        params = dict(config.synthetic)
        gen = params.pop("generator")
        params.setdefault("seed", config.seed)
        if gen == "two_region":
            return synthetic.two_region_dataset(**params)
        if gen == "blobs":
            return synthetic.gaussian_blobs_dataset(**params)
        raise ConfigError(f"unknown synthetic generator {gen!r}")
    return load_dataset(config.views, config.labels, view_names=config.view_names)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def confusion_counts(preds, truths, num_classes: int) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape or preds.size == 0:
        raise DataFormatError("predictions and truths must be equal-length and non-empty")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (truths, preds), 1)
    return cm


def _per_class_prf(cm: np.ndarray):
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    precision = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=(tp + fp) > 0)
    recall = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=(tp + fn) > 0)
    denom = 2 * tp + fp + fn
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return precision, recall, f1


def compute_macro_f1(preds, truths, num_classes: int) -> float:
    """Unweighted mean of per-class F1; classes absent from both sides
    contribute 0."""
    _, _, f1 = _per_class_prf(confusion_counts(preds, truths, num_classes))
    return float(f1.mean())


def compute_metrics(preds, truths, num_classes: int) -> dict:
    cm = confusion_counts(preds, truths, num_classes)
    precision, recall, f1 = _per_class_prf(cm)
    return {
        "accuracy": float(np.diag(cm).sum() / cm.sum()),
        "macro_f1": float(f1.mean()),
        "macro_precision": float(precision.mean()),
        "macro_recall": float(recall.mean()),
    }


def aggregate_metrics(per_fold: list) -> dict:
    keys = sorted(per_fold[0])
    mean = {k: float(np.mean([m[k] for m in per_fold])) for k in keys}
    std = {k: float(np.std([m[k] for m in per_fold])) for k in keys}
    return {"per_fold": per_fold, "mean": mean, "std": std}


# ---------------------------------------------------------------------------
# Per-fold evaluation
# ---------------------------------------------------------------------------

def _query_vectors(dataset, row):
    return [np.asarray(v.data[row], dtype=np.float64) for v in dataset.views]


def _evaluate_method(dataset, state, test_indices, method, fold_no, threads=1):
    """Predict every test row; returns (predictions, provenance records)."""
    test_indices = np.asarray(test_indices, dtype=np.int64)

    def one(row):
        outcome = dres_predict(_query_vectors(dataset, row), state, method)
        return outcome

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, test_indices))
    else:
        outcomes = [one(row) for row in test_indices]

    preds = np.array([o.label for o in outcomes], dtype=np.int64)
    records = []
    for row, outcome in zip(test_indices, outcomes):
        records.append({
            "id": dataset.ids[row],
            "fold": fold_no,
            "method": method,
            "chosen_view": int(outcome.view_choice.chosen_view),
            "tie_broken": bool(outcome.view_choice.tie_broken),
            "ensemble": list(outcome.ensemble.indices),
            "fallback": bool(outcome.ensemble.fallback_used),
            "predicted": int(outcome.label),
            "true": int(dataset.labels[row]),
        })
    return preds, records


def selection_frequencies(records, view_names, spec_kinds) -> dict:
    """Chosen-view and selected-classifier counts over a run's provenance."""
    view_counts = {name: 0 for name in view_names}
    clf_counts = {f"{name}:{kind}": 0 for name in view_names for kind in spec_kinds}
    for rec in records:
        vname = view_names[rec["chosen_view"]]
        view_counts[vname] += 1
        for member in rec["ensemble"]:
            clf_counts[f"{vname}:{spec_kinds[member]}"] += 1
    total_views = sum(view_counts.values())
    total_members = sum(clf_counts.values())
    return {
        "view_counts": view_counts,
        "view_frequencies": {
            k: (v / total_views if total_views else 0.0) for k, v in view_counts.items()
        },
        "classifier_counts": clf_counts,
        "classifier_frequencies": {
            k: (v / total_members if total_members else 0.0)
            for k, v in clf_counts.items()
        },
    }


def _repr_only_predict(dataset, state, row):
    """View selection followed by a full-pool majority vote (no DES stage)."""
    vecs = _query_vectors(dataset, row)
    tth = estimate_test_hardness(vecs, state.indexes, state.hmatrix,
                                 state.k_hardness)
    choice = select_view(tth, state.dsel_mean_hardness)
    pool = state.grid.pools[choice.chosen_view]
    posts = np.vstack([clf.predict_proba(vecs[choice.chosen_view])[0] for clf in pool])
    sel = SelectedEnsemble(tuple(range(len(pool))), "vote_all", False)
    return majority_vote(sel, posts)


# ---------------------------------------------------------------------------
# Experiment entry points
# ---------------------------------------------------------------------------

@dataclass
class ExperimentReport:
    report: dict
    provenance: list = field(default_factory=list)

    def json_bytes(self) -> bytes:
        return (json.dumps(self.report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _config_echo(config: ExperimentConfig) -> dict:
    return {
        "views": config.views,
        "labels": config.labels,
        "synthetic": config.synthetic,
        "methods": list(config.methods),
        "specs": [
            {"kind": s.kind, "hyper": s.hyper, "seed": s.seed}
            for s in config.resolved_specs()
        ],
        "folds": config.folds,
        "dsel_fraction": config.dsel_fraction,
        "k": config.k,
        "k_hardness": config.k_hardness,
        "seed": config.seed,
        "standardize": config.standardize,
        "baselines": list(config.baselines),
        "oracles": config.oracles,
        "ablation": config.ablation,
    }


def _fit_fold(dataset, config, fold, with_meta):
    grid = fit_grid(dataset, fold.train, config.resolved_specs())
    state = build_fold_state(dataset, grid, fold.dsel,
                             k_hardness=config.k_hardness, k_roc=config.k,
                             standardize=config.standardize, with_meta=with_meta)
    return grid, state


def _baseline_members(grid, token):
    if token == "C":
        return "group_C", build_group(grid, "C")
    kind, _, idx = token.partition(":")
    if kind in ("A", "B") and idx.isdigit():
        return f"group_{kind}_{idx}", build_group(grid, kind, int(idx))
    raise ConfigError(f"bad baseline token {token!r}; use 'C', 'A:<spec>', 'B:<view>'")


def run_experiment(dataset: MultiViewDataset, config: ExperimentConfig) -> ExperimentReport:
    """Full cross-validated run: per-method metrics, optional baselines,
    oracles, and the component ablation."""
    plan = make_splits(dataset, config.folds, config.dsel_fraction, config.seed)
    specs = config.resolved_specs()
    with_meta = "meta_des" in config.methods or config.ablation

    method_folds = {m: [] for m in config.methods}
    baseline_folds = {}
    oracle_folds = {m: {"representation": [], "full": []} for m in config.methods}
    ablation_folds = {}
    records = []

    for fold_no, fold in enumerate(plan.folds):
        grid, state = _fit_fold(dataset, config, fold, with_meta)
        truths = dataset.labels[fold.test]

        for method in config.methods:
            preds, recs = _evaluate_method(dataset, state, fold.test, method,
                                           fold_no, threads=config.threads)
            records.extend(recs)
            method_folds[method].append(compute_metrics(preds, truths,
                                                        dataset.num_classes))

        if config.oracles:
            for method in config.methods:
                pipe, repr_preds, full_preds = oracle_predictions(
                    fold.test, state, method)
                rep_m = compute_metrics(repr_preds, truths, dataset.num_classes)
                full_m = compute_metrics(full_preds, truths, dataset.num_classes)
                pipe_m = compute_metrics(pipe, truths, dataset.num_classes)
                if not (full_m["accuracy"] >= rep_m["accuracy"] >= pipe_m["accuracy"]):
                    raise AssertionError(
                        f"oracle dominance violated on fold {fold_no} ({method})"
                    )
                oracle_folds[method]["representation"].append(rep_m)
                oracle_folds[method]["full"].append(full_m)

        for token in config.baselines:
            name, members = _baseline_members(grid, token)
            stacked = fit_stacked(dataset, specs, members,
                                  np.concatenate([fold.train, fold.dsel]),
                                  inner_folds=4,
                                  seed=config.seed * 100003 + fold_no)
            preds = np.array([
                stacked.predict(_query_vectors(dataset, row)) for row in fold.test
            ])
            baseline_folds.setdefault(name, []).append(
                compute_metrics(preds, truths, dataset.num_classes))

        if config.ablation:
            ab = _ablation_fold(dataset, config, grid, state, fold, fold_no)
            for name, metrics in ab.items():
                ablation_folds.setdefault(name, []).append(metrics)

    report = {
        "config": _config_echo(config),
        "dataset": {
            "num_instances": dataset.num_instances,
            "num_views": dataset.num_views,
            "num_classes": dataset.num_classes,
            "view_names": dataset.view_names,
        },
        "methods": {m: aggregate_metrics(v) for m, v in method_folds.items()},
    }
    if baseline_folds:
        report["baselines"] = {
            name: aggregate_metrics(v) for name, v in sorted(baseline_folds.items())
        }
    if config.oracles:
        report["oracles"] = {
            m: {kind: aggregate_metrics(v) for kind, v in d.items()}
            for m, d in oracle_folds.items()
        }
    if ablation_folds:
        report["ablation"] = {
            name: aggregate_metrics(v) for name, v in sorted(ablation_folds.items())
        }
    spec_kinds = [s.kind for s in specs]
    report["selection_frequencies"] = {
        m: selection_frequencies([r for r in records if r["method"] == m],
                                 dataset.view_names, spec_kinds)
        for m in config.methods
    }
    return ExperimentReport(report=report, provenance=records)


def _ablation_fold(dataset, config, grid, state, fold, fold_no):
    """Table rows: no-selection stacking, DES on the easiest fixed view,
    view selection only, the full pipeline, and both oracles."""
    method = config.methods[0]
    truths = dataset.labels[fold.test]
    out = {}

    members = build_group(grid, "C")
    stacked = fit_stacked(dataset, config.resolved_specs(), members,
                          np.concatenate([fold.train, fold.dsel]),
                          inner_folds=4, seed=config.seed * 100003 + fold_no)
    preds = np.array([stacked.predict(_query_vectors(dataset, row))
                      for row in fold.test])
    out["group_c"] = compute_metrics(preds, truths, dataset.num_classes)

    fixed_view = int(np.argmin(state.dsel_mean_hardness))
    preds = np.array([
        stage2_predict(state, fixed_view,
                       np.asarray(dataset.views[fixed_view].data[row], dtype=np.float64),
                       method)[0]
        for row in fold.test
    ])
    out["des_only"] = compute_metrics(preds, truths, dataset.num_classes)

    preds = np.array([_repr_only_predict(dataset, state, row) for row in fold.test])
    out["representation_only"] = compute_metrics(preds, truths, dataset.num_classes)

    pipe, repr_preds, full_preds = oracle_predictions(fold.test, state, method)
    out["dres"] = compute_metrics(pipe, truths, dataset.num_classes)
    out["oracle_representation"] = compute_metrics(repr_preds, truths,
                                                   dataset.num_classes)
    out["oracle_full"] = compute_metrics(full_preds, truths, dataset.num_classes)
    acc = lambda name: out[name]["accuracy"]
    if not (acc("oracle_full") >= acc("oracle_representation") >= acc("dres")):
        raise AssertionError(f"oracle dominance violated on fold {fold_no}")
    return out


def sweep_k(dataset: MultiViewDataset, config: ExperimentConfig,
            k_values=(3, 5, 7, 9, 11, 13)) -> dict:
    """One aggregated MetricSet per (method, hardness-k); the classifier grid
    is fitted once per fold and shared across k values."""
    plan = make_splits(dataset, config.folds, config.dsel_fraction, config.seed)
    with_meta = "meta_des" in config.methods
    folds_by_cell = {(m, k): [] for m in config.methods for k in k_values}
    for fold_no, fold in enumerate(plan.folds):
        grid = fit_grid(dataset, fold.train, config.resolved_specs())
        truths = dataset.labels[fold.test]
        for k_h in k_values:
            state = build_fold_state(dataset, grid, fold.dsel, k_hardness=k_h,
                                     k_roc=config.k,
                                     standardize=config.standardize,
                                     with_meta=with_meta)
            for method in config.methods:
                preds, _ = _evaluate_method(dataset, state, fold.test, method,
                                            fold_no, threads=config.threads)
                folds_by_cell[(method, k_h)].append(
                    compute_metrics(preds, truths, dataset.num_classes))
    return {
        "k_values": list(k_values),
        "methods": list(config.methods),
        "cells": {
            f"{m}|{k}": aggregate_metrics(folds_by_cell[(m, k)])
            for m in config.methods for k in k_values
        },
    }


# ---------------------------------------------------------------------------
# File emission (all byte-deterministic)
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def metrics_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "name", "fold", "accuracy", "macro_f1",
                     "macro_precision", "macro_recall"])

    def emit(section, name, agg):
        for f, m in enumerate(agg["per_fold"]):
            writer.writerow([section, name, f, _fmt(m["accuracy"]), _fmt(m["macro_f1"]),
                             _fmt(m["macro_precision"]), _fmt(m["macro_recall"])])
        for stat in ("mean", "std"):
            m = agg[stat]
            writer.writerow([section, name, stat, _fmt(m["accuracy"]), _fmt(m["macro_f1"]),
                             _fmt(m["macro_precision"]), _fmt(m["macro_recall"])])

    for name in sorted(report.get("methods", {})):
        emit("method", name, report["methods"][name])
    for name in sorted(report.get("baselines", {})):
        emit("baseline", name, report["baselines"][name])
    for method in sorted(report.get("oracles", {})):
        for kind in sorted(report["oracles"][method]):
            emit("oracle", f"{method}:{kind}", report["oracles"][method][kind])
    return buf.getvalue()


def ablation_csv(report: dict) -> str:
    order = ["group_c", "des_only", "representation_only", "dres",
             "oracle_representation", "oracle_full"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["variant", "macro_f1_mean", "macro_f1_std",
                     "accuracy_mean", "accuracy_std"])
    ab = report.get("ablation", {})
    for name in order:
        if name not in ab:
            continue
        agg = ab[name]
        writer.writerow([name, _fmt(agg["mean"]["macro_f1"]), _fmt(agg["std"]["macro_f1"]),
                         _fmt(agg["mean"]["accuracy"]), _fmt(agg["std"]["accuracy"])])
    return buf.getvalue()


def ksweep_csv(sweep: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "k", "macro_f1_mean", "macro_f1_std",
                     "macro_precision_mean", "macro_recall_mean"])
    for method in sweep["methods"]:
        for k in sweep["k_values"]:
            agg = sweep["cells"][f"{method}|{k}"]
            writer.writerow([
                method, k, _fmt(agg["mean"]["macro_f1"]), _fmt(agg["std"]["macro_f1"]),
                _fmt(agg["mean"]["macro_precision"]), _fmt(agg["mean"]["macro_recall"]),
            ])
    return buf.getvalue()


def frequencies_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "kind", "name", "count", "frequency"])
    freqs = report.get("selection_frequencies", {})
    for method in sorted(freqs):
        f = freqs[method]
        for name in sorted(f["view_counts"]):
            writer.writerow([method, "view", name, f["view_counts"][name],
                             _fmt(f["view_frequencies"][name])])
        for name in sorted(f["classifier_counts"]):
            writer.writerow([method, "classifier", name, f["classifier_counts"][name],
                             _fmt(f["classifier_frequencies"][name])])
    return buf.getvalue()


def provenance_jsonl(records) -> str:
    return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in records)


def write_report_files(result: ExperimentReport, dataset, config,
                       outdir, sweep=None) -> list:
    """Write every report artifact; returns the list of paths written."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    def put(name, payload):
        path = os.path.join(outdir, name)
        mode = "wb" if isinstance(payload, bytes) else "w"
        with open(path, mode, newline="" if mode == "w" else None) as fh:
            fh.write(payload)
        written.append(path)

    put("report.json", result.json_bytes())
    put("metrics.csv", metrics_csv(result.report))
    put("frequencies.csv", frequencies_csv(result.report))
    put("provenance.jsonl", provenance_jsonl(result.provenance))
    if "ablation" in result.report:
        put("ablation.csv", ablation_csv(result.report))
    if sweep is not None:
        put("ksweep.csv", ksweep_csv(sweep))
    if dataset.num_views >= 2:
        all_rows = np.arange(dataset.num_instances)
        hm = build_hardness_matrix(dataset, all_rows, config.k_hardness,
                                   standardize=config.standardize)
        put("hardness_stats.csv", stats_csv(hardness_statistics(hm), hm, dataset.ids))
    return written
