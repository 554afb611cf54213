import json

import pytest

from conftest import FIG1
from sisi.dynamics import Params, SimplexPoint, TrajectoryStatus
from sisi.errors import ReportFormatError
from sisi.harness import (
    Branch,
    Budgets,
    EvidenceReport,
    LimitVerdict,
    Scenario,
    SWEEP_COLUMNS,
    SweepTask,
    TrialOutcome,
    TrialRecord,
)
from utils.report_writer import EVIDENCE_COLUMNS, ReportWriter


def refuted_record(index=4, seed=2**63 + 17):
    return TrialRecord(
        trial_index=index,
        trial_seed=seed,
        params=Params(**dict(FIG1, beta2=0.0)),
        start=SimplexPoint(0.1, 0.2, 0.3, 0.4),
        final=(0.5, 0.1, 0.3, 0.1),
        expected="lambda16",
        verdict=LimitVerdict("lambda1", 1e-9, True, 812, TrajectoryStatus.CONVERGED),
        outcome=TrialOutcome.REFUTED,
    )


def sample_report(refuted=(), confirmed=7, inconclusive=1):
    return EvidenceReport(
        scenario=Scenario.CONJECTURE1,
        branch=Branch.ANY,
        seed=99,
        trials=confirmed + len(refuted) + inconclusive,
        confirmed=confirmed,
        refuted=tuple(refuted),
        inconclusive=inconclusive,
        budgets=Budgets(max_iters=1000, tol_conv=1e-10, tol_match=1e-6),
    )


def fixed_points_row(cell=0, **extra):
    row = {column: None for column in SWEEP_COLUMNS[SweepTask.FIXED_POINTS]}
    row.update(cell=cell, labels="lambda1;lambda17", case_tag="alpha*b*beta1*beta2*k1>0",
               root_outcome="unique_positive", A=0.17663087350735425, residual=1e-17, **FIG1)
    row.update(extra)
    return row


class TestFormatValue:
    @pytest.mark.parametrize(
        "value,text",
        [(None, ""), (True, "true"), (False, "false"), (0.1, "0.10000000000000001"), (3, "3"), ("S3", "S3")],
    )
    def test_values(self, value, text):
        assert ReportWriter.format_value(value) == text

    def test_floats_survive_the_round_trip(self):
        value = 0.17663087350735425
        assert float(ReportWriter.format_value(value)) == value


class TestSweepCsv:
    def test_header_and_rows(self):
        text = ReportWriter.sweep_csv([fixed_points_row()], "fixed_points", seed=12)
        lines = text.split("\n")
        assert lines[0] == "# sisi-sweep/1 seed=12 task=fixed_points"
        assert lines[1].split(",") == list(SWEEP_COLUMNS[SweepTask.FIXED_POINTS])
        assert text.endswith("\n")

    def test_read_back(self):
        rows = [fixed_points_row(0), fixed_points_row(1, error="InvalidParameters: b must be nonnegative")]
        meta, parsed = ReportWriter.read_sweep_csv(ReportWriter.sweep_csv(rows, SweepTask.FIXED_POINTS, seed=12))
        assert meta == {"seed": "12", "task": "fixed_points"}
        assert len(parsed) == 2
        assert float(parsed[0]["A"]) == 0.17663087350735425
        assert parsed[0]["error"] == ""
        assert parsed[1]["error"].startswith("InvalidParameters")

    def test_wrong_schema(self):
        text = ReportWriter.sweep_csv([fixed_points_row()], "fixed_points", seed=12)
        with pytest.raises(ReportFormatError):
            ReportWriter.read_sweep_csv(text.replace("sisi-sweep/1", "sisi-sweep/2", 1))

    def test_unknown_task(self):
        text = ReportWriter.sweep_csv([fixed_points_row()], "fixed_points", seed=12)
        with pytest.raises(ReportFormatError):
            ReportWriter.read_sweep_csv(text.replace("task=fixed_points", "task=orbits", 1))

    def test_ragged_row(self):
        text = ReportWriter.sweep_csv([fixed_points_row()], "fixed_points", seed=12) + "1,2,3\n"
        with pytest.raises(ReportFormatError):
            ReportWriter.read_sweep_csv(text)

    def test_non_numeric_parameter(self):
        text = ReportWriter.sweep_csv([fixed_points_row(b="high")], "fixed_points", seed=12)
        with pytest.raises(ReportFormatError):
            ReportWriter.read_sweep_csv(text)

    def test_missing_seed(self):
        text = ReportWriter.sweep_csv([fixed_points_row()], "fixed_points", seed=12)
        with pytest.raises(ReportFormatError):
            ReportWriter.read_sweep_csv(text.replace(" seed=12", "", 1))


class TestEvidenceCsv:
    def test_one_row_per_refuted_trial(self):
        report = sample_report(refuted=[refuted_record(4), refuted_record(9)])
        meta, rows = ReportWriter.read_evidence_csv(ReportWriter.evidence_csv(report))
        assert meta["scenario"] == "conjecture1"
        assert (meta["trials"], meta["refuted"]) == ("10", "2")
        assert [row["trial_index"] for row in rows] == ["4", "9"]
        assert int(rows[0]["trial_seed"]) == 2**63 + 17
        assert rows[0]["expected"] == "lambda16"
        assert rows[0]["matched"] == "lambda1"
        assert rows[0]["converged"] == "true"
        assert float(rows[0]["v0"]) == 0.4

    def test_no_refutations(self):
        text = ReportWriter.evidence_csv(sample_report())
        assert text.count("\n") == 2
        assert text.split("\n")[1].split(",") == list(EVIDENCE_COLUMNS)

    def test_tallies_must_add_up(self):
        text = ReportWriter.evidence_csv(sample_report())
        with pytest.raises(ReportFormatError):
            ReportWriter.read_evidence_csv(text.replace("trials=8", "trials=9", 1))

    def test_row_count_must_match(self):
        text = ReportWriter.evidence_csv(sample_report(refuted=[refuted_record()]))
        truncated = "\n".join(text.split("\n")[:2]) + "\n"
        with pytest.raises(ReportFormatError):
            ReportWriter.read_evidence_csv(truncated)


class TestJson:
    def test_evidence_document(self):
        report = sample_report(refuted=[refuted_record()])
        text = ReportWriter.json_text(report.to_dict())
        document = ReportWriter.read_json(text)
        assert document["refuted"][0]["trial_seed"] == 2**63 + 17
        assert document["refuted"][0]["params"]["beta2"] == 0.0
        assert document["trials"] == 9
        assert text.endswith("}\n")

    def test_serialization_is_canonical(self):
        document = sample_report().to_dict()
        assert ReportWriter.json_text(document) == ReportWriter.json_text(dict(reversed(list(document.items()))))

    def test_sweep_document(self):
        document = ReportWriter.sweep_document([fixed_points_row()], "fixed_points", seed=3)
        parsed = ReportWriter.read_json(ReportWriter.json_text(document))
        assert parsed["columns"] == list(SWEEP_COLUMNS[SweepTask.FIXED_POINTS])
        assert parsed["rows"][0][parsed["columns"].index("labels")] == "lambda1;lambda17"

    def test_writer_requires_schema(self):
        with pytest.raises(ReportFormatError):
            ReportWriter.json_text({"seed": 1})

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            ReportWriter.json_text({"schema": "sisi-report/1", "seed": 1, "A": float("nan")})

    @pytest.mark.parametrize(
        "text",
        [
            "not json",
            json.dumps({"schema": "sisi-report/2", "seed": 1}),
            json.dumps({"schema": "sisi-report/1"}),
            json.dumps({"schema": "sisi-report/1", "seed": 1, "kind": "evidence",
                        "trials": 3, "confirmed": 1, "inconclusive": 1, "refuted": []}),
            json.dumps({"schema": "sisi-report/1", "seed": 1, "kind": "sweep",
                        "columns": ["cell", "b"], "rows": [[0]]}),
        ],
    )
    def test_malformed_documents(self, text):
        with pytest.raises(ReportFormatError):
            ReportWriter.read_json(text)


class TestTableCsv:
    def test_round_trip(self):
        text = ReportWriter.table_csv("sisi-step/1", 0, ["x", "u", "y", "v"], [dict(x=0.25, u=0.25, y=0.25, v=0.25)])
        meta, rows = ReportWriter.read_table(text, "sisi-step/1")
        assert meta == {"seed": "0"}
        assert rows == [{"x": "0.25", "u": "0.25", "y": "0.25", "v": "0.25"}]

    def test_too_short(self):
        with pytest.raises(ReportFormatError):
            ReportWriter.read_table("# sisi-step/1 seed=0\n", "sisi-step/1")


def test_save_creates_directories(tmp_path):
    path = tmp_path / "out" / "report.csv"
    assert ReportWriter.save("a,b\n", str(path))
    assert path.read_text(encoding="utf-8") == "a,b\n"


def test_save_reports_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert not ReportWriter.save("a", str(blocker / "report.csv"))
