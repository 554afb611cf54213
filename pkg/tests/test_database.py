import os
from types import SimpleNamespace

import pytest

from test_report_writer import fixed_points_row, refuted_record, sample_report
from utils.database import ResultStore


@pytest.fixture
def store(tmp_path):
    config = SimpleNamespace(
        STORAGE={
            "database_path": str(tmp_path / "data" / "results.sqlite"),
            "backup_directory": str(tmp_path / "backups"),
        }
    )
    return ResultStore(config)


def test_creates_database_file(store):
    assert os.path.exists(store.db_path)


def test_explicit_path_wins(tmp_path):
    config = SimpleNamespace(STORAGE={"database_path": str(tmp_path / "ignored.sqlite")})
    store = ResultStore(config, db_path=str(tmp_path / "chosen.sqlite"))
    assert store.db_path.endswith("chosen.sqlite")
    assert not os.path.exists(tmp_path / "ignored.sqlite")


def test_save_evidence_with_counterexamples(store):
    report = sample_report(refuted=[refuted_record(4), refuted_record(9, seed=5)])
    run_id = store.save_evidence(report)
    assert run_id > 0

    runs = store.get_runs()
    assert len(runs) == 1
    assert runs[0]["kind"] == "evidence"
    assert runs[0]["label"] == "conjecture1"
    assert runs[0]["seed"] == "99"
    assert (runs[0]["trials"], runs[0]["confirmed"], runs[0]["refuted"]) == (10, 7, 2)

    records = store.get_counterexamples(run_id)
    assert [r["trial_index"] for r in records] == [4, 9]
    assert records[0]["trial_seed"] == 2**63 + 17
    assert records[0]["params"]["beta2"] == 0.0
    assert records[0]["start"] == [0.1, 0.2, 0.3, 0.4]
    assert records[0]["matched"] == "lambda1"


def test_save_sweep_counts_errors(store):
    rows = [fixed_points_row(0), fixed_points_row(1, error="InvalidParameters: b < 0")]
    run_id = store.save_sweep(rows, "fixed_points", seed=3)
    assert run_id > 0
    (run,) = store.get_runs(kind="sweep")
    assert (run["row_count"], run["error_count"], run["label"]) == (2, 1, "fixed_points")
    assert store.get_runs(kind="evidence") == []


def test_statistics_accumulate(store):
    store.save_evidence(sample_report(refuted=[refuted_record()]))
    store.save_evidence(sample_report())
    store.save_sweep([fixed_points_row()], "fixed_points", seed=0)
    (today,) = store.get_statistics(days=1)
    assert today["evidence_runs"] == 2
    assert today["sweep_runs"] == 1
    assert today["trials_run"] == 9 + 8
    assert today["refutations"] == 1


def test_runs_newest_first(store):
    first = store.save_sweep([], "classify", seed=1)
    second = store.save_sweep([], "limit", seed=2)
    assert [run["id"] for run in store.get_runs()] == [second, first]
    assert len(store.get_runs(limit=1)) == 1


def test_unknown_run_has_no_counterexamples(store):
    assert store.get_counterexamples(12345) == []


def test_backup(store):
    store.save_evidence(sample_report())
    path = store.backup_database()
    assert path and os.path.exists(path)
    restored = ResultStore(SimpleNamespace(STORAGE={"database_path": path}))
    assert len(restored.get_runs()) == 1
