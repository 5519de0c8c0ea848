"""Command-line surface: one subcommand per harness entry point.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 internal
invariant failure.
"""

import argparse
import io
import json
import os
import sys
import zipfile

import numpy as np

from . import __version__
from .classifiers import GRID_FORMAT_VERSION, fit_grid, load_grid, save_grid
from .data import (DMAT_VERSION, DataFormatError, ViewMatrix, assemble_dataset,
                   load_dataset, load_view, read_labels_csv, save_view,
                   write_labels_csv)
from .harness import (ConfigError, ExperimentConfig, load_config,
                      load_config_dataset, run_experiment, selection_frequencies,
                      sweep_k, write_report_files, ksweep_csv)
from .hardness import (build_hardness_matrix, hardness_csv, hardness_heatmap_csv,
                       hardness_json, hardness_statistics, stats_csv)
from .selection import METHODS, build_fold_state, dres_predict

BUNDLE_FORMAT_VERSION = 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="dres", description=__doc__)
    parser.add_argument("--version", action="store_true",
                        help="print engine and format versions and exit")
    sub = parser.add_subparsers(dest="command")

    def add_config_opts(p):
        p.add_argument("--config", required=True, help="TOML or JSON run config")
        p.add_argument("--out-dir", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=None, help="parallel query workers")

    p = sub.add_parser("validate", help="load views + labels and report shapes")
    p.add_argument("--views", nargs="+", required=True)
    p.add_argument("--labels", required=True)

    p = sub.add_parser("hardness", help="per-view kDN scores over a dataset")
    p.add_argument("--views", nargs="+", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--out", required=True, help="hardness CSV path")
    p.add_argument("--heatmap", default=None, help="optional heat-map layout CSV")

    p = sub.add_parser("analyze", help="cross-view hardness statistics")
    p.add_argument("--views", nargs="+", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("train", help="fit a model bundle on a full dataset")
    add_config_opts(p)
    p.add_argument("--out", required=True, help="bundle path")

    p = sub.add_parser("predict", help="predict new instances from a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--views", nargs="+", required=True,
                   help="one query matrix per view, bundle view order")
    p.add_argument("--method", default="knora_e", choices=METHODS)
    p.add_argument("--out", required=True, help="JSON-lines predictions path")

    for name, help_text in (
        ("evaluate", "cross-validated evaluation, writes the report files"),
        ("ablate", "component ablation table"),
        ("oracle", "oracle upper bounds"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_config_opts(p)

    p = sub.add_parser("sweep-k", help="hardness-k sensitivity sweep")
    add_config_opts(p)
    p.add_argument("--k-values", default="3,5,7,9,11,13",
                   help="comma-separated hardness k values")

    p = sub.add_parser("convert", help="convert a matrix between CSV and DMAT")
    p.add_argument("--in", dest="src", required=True)
    p.add_argument("--out", dest="dst", required=True)
    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
        config.specs = None  # re-derive spec seeds from the override
    if getattr(args, "threads", None) is not None:
        config.threads = args.threads
    if getattr(args, "out_dir", None) is not None:
        config.output_dir = args.out_dir
    return config


# ---------------------------------------------------------------------------
# Model bundle: grid archive + DSEL views/labels, enough to rebuild the
# prediction state deterministically.
# ---------------------------------------------------------------------------

_EPOCH = (1980, 1, 1, 0, 0, 0)


def _write_bundle(path, dataset, grid, dsel_indices, config):
    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "k": config.k,
        "k_hardness": config.k_hardness,
        "standardize": config.standardize,
        "num_classes": dataset.num_classes,
        "view_names": dataset.view_names,
        "dsel_ids": [dataset.ids[i] for i in dsel_indices],
    }
    grid_buf = io.BytesIO()
    save_grid(grid, grid_buf)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr(zipfile.ZipInfo("manifest.json", date_time=_EPOCH),
                    json.dumps(manifest, sort_keys=True, indent=2))
        zf.writestr(zipfile.ZipInfo("grid.zip", date_time=_EPOCH), grid_buf.getvalue())
        dsel_labels = dataset.labels[dsel_indices]
        buf = io.StringIO()
        write_rows = [("id", "label")] + [
            (dataset.ids[i], int(dataset.labels[i])) for i in dsel_indices
        ]
        buf.write("\n".join(f"{a},{b}" for a, b in write_rows) + "\n")
        zf.writestr(zipfile.ZipInfo("dsel_labels.csv", date_time=_EPOCH), buf.getvalue())
        npz = io.BytesIO()
        arrays = {
            f"view_{j}": np.asarray(v.data[dsel_indices])
            for j, v in enumerate(dataset.views)
        }
        arrays["labels"] = dsel_labels
        np.savez(npz, **arrays)
        zf.writestr(zipfile.ZipInfo("dsel.npz", date_time=_EPOCH), npz.getvalue())


def _read_bundle(path):
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != BUNDLE_FORMAT_VERSION:
            raise DataFormatError(
                f"{path}: unsupported bundle version {manifest.get('format_version')}"
            )
        grid = load_grid(io.BytesIO(zf.read("grid.zip")))
        with np.load(io.BytesIO(zf.read("dsel.npz"))) as npz:
            views = [
                ViewMatrix(name=name, data=npz[f"view_{j}"])
                for j, name in enumerate(manifest["view_names"])
            ]
            labels = npz["labels"].copy()
    dsel_dataset = assemble_dataset(views, labels, ids=manifest["dsel_ids"])
    return manifest, grid, dsel_dataset


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def _cmd_validate(args):
    dataset = load_dataset(args.views, args.labels)
    print(f"instances: {dataset.num_instances}")
    print(f"classes:   {dataset.num_classes}")
    for v in dataset.views:
        print(f"view {v.name!r}: {v.rows} x {v.dim}")
    return 0


def _cmd_hardness(args):
    dataset = load_dataset(args.views, args.labels)
    hm = build_hardness_matrix(dataset, np.arange(dataset.num_instances), args.k,
                               standardize=not args.no_standardize)
    with open(args.out, "w", newline="") as fh:
        fh.write(hardness_csv(hm, dataset.ids))
    if args.heatmap:
        with open(args.heatmap, "w", newline="") as fh:
            fh.write(hardness_heatmap_csv(hm, dataset.ids))
    print(f"wrote {args.out}")
    return 0


def _cmd_analyze(args):
    dataset = load_dataset(args.views, args.labels)
    hm = build_hardness_matrix(dataset, np.arange(dataset.num_instances), args.k,
                               standardize=not args.no_standardize)
    stats = hardness_statistics(hm)
    os.makedirs(args.out_dir, exist_ok=True)
    stats_path = os.path.join(args.out_dir, "hardness_stats.csv")
    with open(stats_path, "w", newline="") as fh:
        fh.write(stats_csv(stats, hm, dataset.ids))
    profile_path = os.path.join(args.out_dir, "range_profile.csv")
    with open(profile_path, "w", newline="") as fh:
        fh.write("rank,range\n")
        for i, r in enumerate(stats.range_profile):
            fh.write(f"{i},{repr(float(r))}\n")
    heat_path = os.path.join(args.out_dir, "hardness_heatmap.csv")
    with open(heat_path, "w", newline="") as fh:
        fh.write(hardness_heatmap_csv(hm, dataset.ids))
    json_path = os.path.join(args.out_dir, "hardness.json")
    with open(json_path, "w") as fh:
        fh.write(hardness_json(hm, stats, dataset.ids))
    print(f"wrote {stats_path}, {profile_path}, {heat_path}, {json_path}")
    return 0


def _cmd_train(args):
    config = _apply_overrides(load_config(args.config), args)
    dataset = load_config_dataset(config)
    from .data import make_splits
    plan = make_splits(dataset, folds=max(config.folds, 2),
                       dsel_fraction=config.dsel_fraction, seed=config.seed)
    # Train on everything except the DSEL carve-out of fold 0.
    fold = plan.folds[0]
    train_idx = np.array(sorted(set(fold.train.tolist()) | set(fold.test.tolist())),
                         dtype=np.int64)
    grid = fit_grid(dataset, train_idx, config.resolved_specs())
    _write_bundle(args.out, dataset, grid, fold.dsel, config)
    print(f"wrote {args.out}")
    return 0


def _cmd_predict(args):
    manifest, grid, dsel_dataset = _read_bundle(args.bundle)
    if len(args.views) != dsel_dataset.num_views:
        raise DataFormatError(
            f"bundle has {dsel_dataset.num_views} views, got {len(args.views)} query files"
        )
    queries = [load_view(p) for p in args.views]
    rows = queries[0].rows
    for q, v in zip(queries, dsel_dataset.views):
        if q.rows != rows:
            raise DataFormatError("query views disagree on row count")
        if q.dim != v.dim:
            raise DataFormatError(
                f"query view {q.name!r} dim {q.dim} != bundle view {v.name!r} dim {v.dim}"
            )
    state = build_fold_state(
        dsel_dataset, grid, np.arange(dsel_dataset.num_instances),
        k_hardness=manifest["k_hardness"], k_roc=manifest["k"],
        standardize=manifest["standardize"], with_meta=args.method == "meta_des")
    with open(args.out, "w") as fh:
        for r in range(rows):
            vecs = [np.asarray(q.data[r], dtype=np.float64) for q in queries]
            outcome = dres_predict(vecs, state, args.method)
            fh.write(json.dumps({
                "id": str(r),
                "method": args.method,
                "chosen_view": int(outcome.view_choice.chosen_view),
                "ensemble": list(outcome.ensemble.indices),
                "fallback": bool(outcome.ensemble.fallback_used),
                "predicted": int(outcome.label),
            }, sort_keys=True) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args, ablation=False, oracles=False):
    config = _apply_overrides(load_config(args.config), args)
    if ablation:
        config.ablation = True
    if oracles:
        config.oracles = True
    dataset = load_config_dataset(config)
    result = run_experiment(dataset, config)
    written = write_report_files(result, dataset, config, config.output_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_sweep(args):
    config = _apply_overrides(load_config(args.config), args)
    try:
        k_values = tuple(int(x) for x in args.k_values.split(","))
    except ValueError:
        raise _UsageError(f"bad --k-values {args.k_values!r}") from None
    dataset = load_config_dataset(config)
    sweep = sweep_k(dataset, config, k_values)
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "ksweep.csv")
    with open(path, "w", newline="") as fh:
        fh.write(ksweep_csv(sweep))
    print(f"wrote {path}")
    return 0


def _cmd_convert(args):
    view = load_view(args.src)
    save_view(args.dst, view)
    print(f"wrote {args.dst}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"dres: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if args.version:
        print(f"dres {__version__} (dmat format {DMAT_VERSION}, "
              f"grid format {GRID_FORMAT_VERSION}, bundle format {BUNDLE_FORMAT_VERSION})")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handlers = {
        "validate": _cmd_validate,
        "hardness": _cmd_hardness,
        "analyze": _cmd_analyze,
        "train": _cmd_train,
        "predict": _cmd_predict,
        "evaluate": _cmd_evaluate,
        "ablate": lambda a: _cmd_evaluate(a, ablation=True),
        "oracle": lambda a: _cmd_evaluate(a, oracles=True),
        "sweep-k": _cmd_sweep,
        "convert": _cmd_convert,
    }
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        print(f"dres: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, ConfigError) as exc:
        print(f"dres: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"dres: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant failure
        print(f"dres: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
