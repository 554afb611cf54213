import json
import logging

import pytest

import config
from main import run_command, setup_logging
from utils.report_writer import ReportWriter

FIG1_FLAGS = ["--params", "0.2,0.3,0.7,0.6,1,0.3"]
UNIFORM = ["--start", "0.25,0.25,0.25,0.25"]


def run(capsys, *argv):
    code = run_command(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", *FIG1_FLAGS)
    assert code == 0
    assert "QSO: yes" in out


def test_validate_reports_violation(capsys):
    code, out, _ = run(capsys, "validate", *FIG1_FLAGS, "--alpha", "0.9")
    assert code == 0
    assert "QSO: no" in out
    assert "alpha + b <= 1" in out


def test_individual_flags(capsys):
    code, out, _ = run(
        capsys, "validate", "--b", "0.2", "--alpha", "0.3", "--beta1", "0.7", "--beta2", "0.6", "--k1", "1", "--k2", "0.3"
    )
    assert code == 0
    assert "QSO: yes" in out


def test_step(capsys):
    code, out, _ = run(capsys, "step", *FIG1_FLAGS, *UNIFORM)
    assert code == 0
    assert "(0.343125, 0.181875, 0.22625, 0.24875)" in out


def test_fixed_points(capsys):
    code, out, _ = run(capsys, "fixed-points", *FIG1_FLAGS)
    assert code == 0
    assert "lambda1:" in out
    assert "lambda17:" in out
    a_line = next(line for line in out.splitlines() if line.startswith("A = "))
    assert float(a_line.split()[2]) == pytest.approx(0.17663, abs=1e-5)


def test_classify_fixed_points(capsys):
    code, out, _ = run(capsys, "classify", *FIG1_FLAGS)
    assert code == 0
    assert "lambda1: saddle" in out


def test_classify_non_fixed_point(capsys):
    code, _, err = run(capsys, "classify", *FIG1_FLAGS, *UNIFORM)
    assert code == 1
    assert "Error:" in err


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", *FIG1_FLAGS, *UNIFORM, "--max-iters", "100000")
    assert code == 0
    assert "status: converged" in out
    assert "limit: lambda17" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", *FIG1_FLAGS, *UNIFORM, "--max-iters", "0"],
        ["simulate", *FIG1_FLAGS, *UNIFORM, "--tol", "0"],
        ["simulate", *FIG1_FLAGS],
        ["validate", "--b", "0.2"],
        ["evidence", *FIG1_FLAGS],
        ["evidence", "--scenario", "conjecture3"],
        ["evidence", "--scenario", "theorem3", "--trials", "-1"],
        ["sweep", "--task", "limit"],
        ["validate", *FIG1_FLAGS, "--format", "xml"],
        ["frobnicate"],
        ["validate", *FIG1_FLAGS, "--seed", "-1"],
        ["step", *FIG1_FLAGS, *UNIFORM, "--seed", str(2**64)],
        ["evidence", "--scenario", "theorem3", "--trials", "1", "--seed", str(2**64)],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_start_outside_simplex(capsys):
    code, _, err = run(capsys, "simulate", *FIG1_FLAGS, "--start", "0.5,0.5,0.5,0")
    assert code == 1
    assert "Error:" in err


def test_negative_parameter(capsys):
    code, _, err = run(capsys, "validate", *FIG1_FLAGS, "--b", "-0.2")
    assert code == 1
    assert "Error:" in err


def test_json_output(tmp_path, capsys):
    path = tmp_path / "fixed.json"
    code, out, _ = run(capsys, "fixed-points", *FIG1_FLAGS, "--out", str(path))
    assert code == 0
    assert "case:" in out
    document = ReportWriter.read_json(path.read_text(encoding="utf-8"))
    assert document["kind"] == "fixed_points"
    assert [row["label"] for row in document["fixed_points"]] == ["lambda1", "lambda17"]
    assert document["root"]["A"] == pytest.approx(0.17663, abs=1e-5)


def test_csv_to_stdout(capsys):
    code, out, _ = run(capsys, "step", *FIG1_FLAGS, *UNIFORM, "--format", "csv", "--seed", "7")
    assert code == 0
    meta, rows = ReportWriter.read_table(out, "sisi-step/1")
    assert meta == {"seed": "7"}
    assert float(rows[0]["x"]) == pytest.approx(0.343125, abs=1e-15)


def test_trajectory_csv(tmp_path, capsys):
    path = tmp_path / "run.csv"
    code, _, _ = run(capsys, "simulate", *FIG1_FLAGS, *UNIFORM, "--max-iters", "5", "--out", str(path))
    assert code == 0
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# sisi-trajectory/1 status=max_iters_reached")
    assert len(text.strip().split("\n")) == 2 + 6


def test_evidence_is_byte_identical(tmp_path, capsys):
    outputs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        code, _, _ = run(
            capsys, "evidence", "--scenario", "theorem3", "--trials", "5", "--seed", "42",
            "--max-iters", "100000", "--out", str(path),
        )
        assert code == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    document = json.loads(outputs[0])
    assert document["trials"] == 5
    assert document["seed"] == 42
    assert document["scenario"] == "theorem3"


def test_evidence_csv_and_store(tmp_path, capsys):
    db = tmp_path / "runs.sqlite"
    code, out, _ = run(
        capsys, "evidence", "--scenario", "conjecture2", "--trials", "3", "--format", "csv",
        "--b", "0.2", "--alpha", "0.3", "--beta1", "0.7", "--beta2", "0.6", "--k1", "1", "--k2", "0.3",
        "--max-iters", "100000", "--store", str(db),
    )
    assert code == 0
    meta, _ = ReportWriter.read_evidence_csv(out)
    assert meta["trials"] == "3"
    assert db.exists()


def test_sweep(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "ranges": {"k1": [0.5, 1.0, 2]},
        "fixed": {"b": 0.2, "alpha": 0.3, "beta1": 0.7, "beta2": 0.6, "k2": 0.3},
    }))
    out_path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--grid", str(grid), "--task", "fixed_points", "--out", str(out_path))
    assert code == 0
    assert "2 cell(s)" in out
    meta, rows = ReportWriter.read_sweep_csv(out_path.read_text(encoding="utf-8"))
    assert meta["task"] == "fixed_points"
    assert [row["root_outcome"] for row in rows] == ["no_positive_root", "unique_positive"]


def test_sweep_with_missing_grid_file(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--grid", str(tmp_path / "missing.json"), "--task", "classify")
    assert code == 1
    assert "Error:" in err


def test_sweep_limit_without_initial_points(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"fixed": {"b": 0.2, "alpha": 0.3, "beta1": 0.7, "beta2": 0.6, "k1": 1, "k2": 0.3}}))
    code, _, _ = run(capsys, "sweep", "--grid", str(grid), "--task", "limit")
    assert code == 1


def test_config_file(tmp_path, capsys):
    settings = tmp_path / "run.json"
    settings.write_text(json.dumps({"params": "0.2,0.3,0.7,0.6,1,0.3", "alpha": 0.9}))
    code, out, _ = run(capsys, "validate", "--config", str(settings))
    assert code == 0
    assert "QSO: no" in out

    code, out, _ = run(capsys, "validate", "--config", str(settings), "--alpha", "0.3")
    assert "QSO: yes" in out


def test_config_file_unknown_key(tmp_path, capsys):
    settings = tmp_path / "run.json"
    settings.write_text(json.dumps({"gamma": 1}))
    code, _, _ = run(capsys, "validate", *FIG1_FLAGS, "--config", str(settings))
    assert code == 2


def test_largest_seed_is_accepted(capsys):
    code, _, _ = run(capsys, "validate", *FIG1_FLAGS, "--seed", str(2**64 - 1))
    assert code == 0


def test_setup_logging_opens_one_log_file(tmp_path, monkeypatch):
    log_dir = tmp_path / "logs"
    monkeypatch.setitem(config.LOGGING, "log_directory", str(log_dir))
    root = logging.getLogger()
    monkeypatch.setattr(root, "handlers", [])
    level = root.level
    try:
        setup_logging("INFO")
        setup_logging("DEBUG")
        assert len(list(log_dir.iterdir())) == 1
        assert sum(isinstance(h, logging.FileHandler) for h in root.handlers) == 1
        assert root.level == logging.DEBUG
    finally:
        for handler in root.handlers:
            handler.close()
        root.setLevel(level)
