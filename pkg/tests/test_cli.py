import json
import os

import numpy as np
import pytest

from dres.cli import main
from dres.data import ViewMatrix, read_view_csv, write_dmat, write_labels_csv, write_view_csv


@pytest.fixture()
def blob_files(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.array([0, 1] * 30)
    ids = [f"i{i}" for i in range(60)]
    paths = []
    for j in range(2):
        centers = rng.normal(0, 6, size=(2, 3))
        vm = ViewMatrix(f"v{j}", centers[labels] + rng.normal(0, 1, (60, 3)))
        p = tmp_path / f"v{j}.dmat"
        write_dmat(p, vm)
        paths.append(str(p))
    labels_path = tmp_path / "labels.csv"
    write_labels_csv(labels_path, ids, labels)
    return paths, str(labels_path)


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert "dres" in out and "dmat format 1" in out


def test_no_command_usage(capsys):
    assert main([]) == 1


def test_unknown_command_usage(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_required_flag_usage(capsys):
    assert main(["validate", "--labels", "x.csv"]) == 1


def test_validate_ok(blob_files, capsys):
    views, labels = blob_files
    assert main(["validate", "--views", *views, "--labels", labels]) == 0
    out = capsys.readouterr().out
    assert "instances: 60" in out and "classes:   2" in out


def test_validate_missing_file_exit_2(tmp_path, capsys):
    assert main(["validate", "--views", str(tmp_path / "nope.dmat"),
                 "--labels", str(tmp_path / "nope.csv")]) == 2


def test_validate_corrupt_file_exit_2(tmp_path, blob_files, capsys):
    views, labels = blob_files
    bad = tmp_path / "bad.dmat"
    bad.write_bytes(b"DMAT" + b"\x01")
    assert main(["validate", "--views", str(bad), "--labels", labels]) == 2


def test_internal_error_exit_3(monkeypatch, capsys):
    import dres.cli as cli

    def boom(args):
        raise RuntimeError("wat")

    monkeypatch.setitem(cli.main.__globals__, "_cmd_validate", boom)
    # handler table is built inside main; patch the function it references
    monkeypatch.setattr(cli, "_cmd_validate", boom)
    assert main(["validate", "--views", "x", "--labels", "y"]) == 3


def test_convert_round_trip(tmp_path, capsys):
    src = tmp_path / "m.csv"
    src.write_text("f0,f1\n1.5,-2.25\n0.125,3.0\n")
    dmat = tmp_path / "m.dmat"
    back = tmp_path / "back.csv"
    assert main(["convert", "--in", str(src), "--out", str(dmat)]) == 0
    assert main(["convert", "--in", str(dmat), "--out", str(back)]) == 0
    a = read_view_csv(src)
    b = read_view_csv(back)
    np.testing.assert_array_equal(a.data, b.data)  # exact float32 values


def test_hardness_command(tmp_path, blob_files, capsys):
    views, labels = blob_files
    out = tmp_path / "h.csv"
    heat = tmp_path / "heat.csv"
    assert main(["hardness", "--views", *views, "--labels", labels,
                 "--k", "5", "--out", str(out), "--heatmap", str(heat)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "instance_id,v0,v1"
    assert len(lines) == 61
    heat_lines = heat.read_text().strip().split("\n")
    assert len(heat_lines) == 3


def test_analyze_command(tmp_path, blob_files):
    views, labels = blob_files
    outdir = tmp_path / "analysis"
    assert main(["analyze", "--views", *views, "--labels", labels,
                 "--out-dir", str(outdir)]) == 0
    assert (outdir / "hardness_stats.csv").exists()
    assert (outdir / "range_profile.csv").exists()
    assert (outdir / "hardness_heatmap.csv").exists()
    payload = json.loads((outdir / "hardness.json").read_text())
    assert payload["view_names"] == ["v0", "v1"]
    assert len(payload["scores"]) == 60
    assert len(payload["stats"]["range"]) == 60


def _write_config(tmp_path, **extra):
    cfg = {
        "synthetic": {"generator": "blobs", "n_per_class": 25, "separation": 8.0},
        "methods": ["knora_e"],
        "folds": 2,
        "dsel_fraction": 0.3,
        "seed": 3,
        "output_dir": str(tmp_path / "out"),
    }
    cfg.update(extra)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def test_evaluate_writes_reports(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["evaluate", "--config", str(cfg)]) == 0
    outdir = tmp_path / "out"
    for name in ("report.json", "metrics.csv", "frequencies.csv",
                 "provenance.jsonl", "hardness_stats.csv"):
        assert (outdir / name).exists(), name
    report = json.loads((outdir / "report.json").read_text())
    assert "knora_e" in report["methods"]


def test_evaluate_byte_identical_across_threads(tmp_path):
    cfg = _write_config(tmp_path)
    main(["evaluate", "--config", str(cfg), "--out-dir", str(tmp_path / "a"),
          "--threads", "1"])
    main(["evaluate", "--config", str(cfg), "--out-dir", str(tmp_path / "b"),
          "--threads", "4"])
    for name in ("metrics.csv", "provenance.jsonl", "frequencies.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes()


def test_ablate_writes_table(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["ablate", "--config", str(cfg)]) == 0
    text = (tmp_path / "out" / "ablation.csv").read_text()
    assert text.startswith("variant,")
    assert "dres" in text and "group_c" in text


def test_sweep_k_command(tmp_path):
    cfg = _write_config(tmp_path)
    assert main(["sweep-k", "--config", str(cfg), "--k-values", "3,5"]) == 0
    lines = (tmp_path / "out" / "ksweep.csv").read_text().strip().split("\n")
    assert len(lines) == 3


def test_sweep_k_bad_values_usage(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["sweep-k", "--config", str(cfg), "--k-values", "3,banana"]) == 1


def test_config_error_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"methods": ["nonsense"],
                                "synthetic": {"generator": "blobs"}}))
    assert main(["evaluate", "--config", str(path)]) == 2


def test_train_and_predict_bundle(tmp_path, blob_files, capsys):
    views, labels = blob_files
    cfg = {
        "views": views, "labels": labels,
        "methods": ["knora_e"], "folds": 4, "dsel_fraction": 0.3, "seed": 1,
    }
    cfg_path = tmp_path / "train.json"
    cfg_path.write_text(json.dumps(cfg))
    bundle = tmp_path / "model.bundle"
    assert main(["train", "--config", str(cfg_path), "--out", str(bundle)]) == 0
    assert bundle.exists()

    rng = np.random.default_rng(9)
    qpaths = []
    for j in range(2):
        vm = ViewMatrix(f"q{j}", rng.normal(0, 3, size=(5, 3)))
        p = tmp_path / f"q{j}.csv"
        write_view_csv(p, vm)
        qpaths.append(str(p))
    preds = tmp_path / "preds.jsonl"
    assert main(["predict", "--bundle", str(bundle), "--views", *qpaths,
                 "--method", "knora_e", "--out", str(preds)]) == 0
    records = [json.loads(line) for line in preds.read_text().splitlines()]
    assert len(records) == 5
    for rec in records:
        assert rec["predicted"] in (0, 1)
        assert rec["chosen_view"] in (0, 1)
        assert len(rec["ensemble"]) >= 1


def test_outputs_confined_to_output_dir(tmp_path, monkeypatch):
    cfg = _write_config(tmp_path)
    workdir = tmp_path / "cwd"
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    before = set(os.listdir(workdir))
    assert main(["evaluate", "--config", str(cfg)]) == 0
    assert set(os.listdir(workdir)) == before
