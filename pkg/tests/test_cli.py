import csv
import json

import numpy as np
import pytest

from procscore.activity import export_curves_json
from procscore.cli import main
from procscore.deviations import default_feature_defs, save_feature_defs
from procscore.synthetic import example_process_model


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# procscore ")
    return list(csv.DictReader(lines[1:]))


def test_mine_writes_one_row_per_commit(three_commit_repo, tmp_path):
    repo, shas = three_commit_repo
    out = tmp_path / "out"
    assert run("mine", repo, "--out", out) == 0
    rows = read_csv(out / "commits.csv")
    assert [r["id"] for r in rows] == shas


def test_mine_rerun_is_byte_identical(three_commit_repo, tmp_path):
    repo, _ = three_commit_repo
    assert run("mine", repo, "--out", tmp_path / "a") == 0
    assert run("mine", repo, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "commits.csv").read_bytes() == (tmp_path / "b" / "commits.csv").read_bytes()


def test_mine_missing_repo_exits_2(tmp_path, capsys):
    assert run("mine", tmp_path / "nope", "--out", tmp_path / "o") == 2
    assert "error" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run("mine", "--config", cfg) == 2
    cfg.write_text(json.dumps({"bogus": {}}))
    assert run("mine", "--config", cfg) == 2


def _labeled_commits(repo, tmp_path, label="c"):
    out = tmp_path / "mined"
    assert run("mine", repo, "--out", out) == 0
    lines = (out / "commits.csv").read_text().splitlines()
    body = [lines[1] + ",label"] + [ln + f",{label}" for ln in lines[2:]]
    path = tmp_path / "labeled.csv"
    path.write_text("\n".join(body) + "\n")
    return path


def test_classify_single_class(three_commit_repo, tmp_path):
    repo, shas = three_commit_repo
    train = _labeled_commits(repo, tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"classify": {"train": train.name, "order": 0, "bandwidth_rule": "silverman"}}))
    out = tmp_path / "out"
    assert run("classify", "--config", cfg, "--out", out) == 0
    rows = read_csv(out / "classified.csv")
    assert [r["id"] for r in rows] == shas
    assert all(r["predicted"] == "c" for r in rows)
    assert all(float(r["p_c"]) == pytest.approx(1.0) for r in rows)
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["accuracy"] == 1.0 and metrics["meta"]["command"] == "classify"
    # the saved model is reusable
    cfg.write_text(json.dumps({"classify": {"model": str(out / "model.json"), "input": train.name}}))
    assert run("classify", "--config", cfg, "--out", tmp_path / "out2") == 0
    assert read_csv(tmp_path / "out2" / "classified.csv") == rows


def test_classify_without_model_or_labels_exits_2(tmp_path):
    assert run("classify", "--out", tmp_path / "o") == 2


def test_curves_grid_and_shape(tmp_path):
    issues = tmp_path / "issues.csv"
    rng = np.random.default_rng(0)
    rows = ["activity,timestamp,hours"]
    for act in ("req", "dev", "desc"):
        for t in rng.uniform(0, 1e6, 25):
            rows.append(f"{act},{t:.0f},{rng.uniform(0.5, 4):.2f}")
    issues.write_text("\n".join(rows) + "\n")
    out = tmp_path / "out"
    assert run("curves", "--issues", issues, "--out", out, "--svg") == 0
    for act in ("req", "dev", "desc"):
        table = read_csv(out / f"curve_{act}.csv")
        assert len(table) == 512
        f = np.array([float(r["f"]) for r in table])
        big_f = np.array([float(r["F"]) for r in table])
        assert np.all(f >= 0) and np.all(np.diff(big_f) >= -1e-12)
        assert big_f[0] == pytest.approx(0.0, abs=1e-12) and big_f[-1] == pytest.approx(1.0, abs=1e-9)
    assert (out / "curves.svg").read_text().startswith("<svg")
    assert set(json.loads((out / "curves.json").read_text())["curves"]) == {"req", "dev", "desc"}


@pytest.fixture
def model_files(tmp_path):
    pm = example_process_model()
    pm_path = tmp_path / "pm.json"
    pm_path.write_text(json.dumps(pm.to_dict()))
    defs_path = tmp_path / "defs.json"
    save_feature_defs(default_feature_defs(), defs_path)
    return pm_path, defs_path


def test_calibrate_deterministic(model_files, tmp_path):
    pm_path, defs_path = model_files
    args = ["calibrate", "--process-model", pm_path, "--feature-defs", defs_path, "--n-processes", 50, "--seed", 5]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "calibration_report.csv" in files and len(files) == 4
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = read_csv(tmp_path / "a" / "calibration_report.csv")
    assert [r["n"] for r in report] == ["50"] * 3
    assert run(*args[:-1], 6, "--out", tmp_path / "c") == 0
    assert (tmp_path / "c" / "calibration_report.csv").read_bytes() != (tmp_path / "a" / "calibration_report.csv").read_bytes()


def test_calibrate_empty_defs_exits_2(model_files, tmp_path):
    pm_path, _ = model_files
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert run("calibrate", "--process-model", pm_path, "--feature-defs", empty, "--n-processes", 20,
               "--out", tmp_path / "o") == 2


def test_simulate_with_features(model_files, tmp_path):
    pm_path, defs_path = model_files
    out = tmp_path / "o"
    assert run("simulate", "--process-model", pm_path, "--feature-defs", defs_path, "--n-processes", 12,
               "--out", out) == 0
    rows = read_csv(out / "simulated.csv")
    assert len(rows) == 12 and "area:req:0.7-0.9" in rows[0]
    assert all(10 <= int(r["n_events"]) <= 100 for r in rows)


def test_assess_end_to_end_and_missing_transform(model_files, tmp_path, capsys):
    pm_path, defs_path = model_files
    tdir = tmp_path / "t"
    assert run("calibrate", "--process-model", pm_path, "--feature-defs", defs_path, "--n-processes", 40,
               "--out", tdir) == 0
    project = tmp_path / "project.json"
    export_curves_json(dict(example_process_model(seed=99).curves), project)
    args = ["assess", "--process-model", pm_path, "--feature-defs", defs_path, "--project", project]
    assert run(*args, "--transforms", tdir, "--out", tmp_path / "o") == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert [f["feature"] for f in report["features"]] == [fd.name for fd in default_feature_defs()]
    assert all(0.0 <= f["score"] <= 1.0 for f in report["features"])
    assert "feature" in capsys.readouterr().out
    # drop one transform: exit 2
    next(tdir.glob("transform_area*.json")).unlink()
    assert run(*args, "--transforms", tdir, "--out", tmp_path / "o2") == 2


def test_assess_precomputed_table(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"assess": {"precomputed": {
        "features": ["f1", "f2", "f3"], "raw": [0.9, 2.0, 0.1], "scores": [0.8, 0.2, 0.5],
        "importances": [0.5, 0.3, 0.2], "severity": 6.4567}}}))
    assert run("assess", "--config", cfg, "--out", tmp_path / "o") == 0
    text = capsys.readouterr().out
    assert "predicted severity: 6.46 / 10" in text
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["order_by_score"] == ["f1", "f3", "f2"]
    assert report["weighted_total"] == pytest.approx(0.8 * 0.5 + 0.2 * 0.3 + 0.5 * 0.2)
