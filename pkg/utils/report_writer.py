#!/usr/bin/env python3
"""
Report Writer Utility

Serializes sweep tables and evidence reports to CSV and JSON, and reads them
back under their declared schema.

CSV files start with a comment line naming the schema and the run seed,
followed by the header row. Floats are written with 17 significant digits so
values survive the round trip exactly.
"""

import csv
import io
import json
import logging
import math
import os
from typing import Any, Dict, List, Sequence, Tuple

from sisi.dynamics import COORD_NAMES, PARAM_NAMES
from sisi.errors import ReportFormatError
from sisi.harness import REPORT_SCHEMA, SWEEP_COLUMNS, EvidenceReport, SweepTask

logger = logging.getLogger(__name__)

SWEEP_CSV_SCHEMA = "sisi-sweep/1"
EVIDENCE_CSV_SCHEMA = "sisi-evidence/1"

EVIDENCE_COLUMNS = (
    ("trial_index", "trial_seed")
    + PARAM_NAMES
    + tuple(f"{c}0" for c in COORD_NAMES)
    + tuple(f"{c}_final" for c in COORD_NAMES)
    + ("expected", "matched", "distance", "converged", "steps", "status")
)

_EVIDENCE_TALLIES = ("trials", "confirmed", "refuted", "inconclusive")


class ReportWriter:
    """Utility for writing and re-reading machine output"""

    @staticmethod
    def format_value(value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return format(value, ".17g")
        return str(value)

    @staticmethod
    def _csv_text(comment: str, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
        buffer = io.StringIO()
        buffer.write(f"# {comment}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([ReportWriter.format_value(row.get(column)) for column in columns])
        return buffer.getvalue()

    @staticmethod
    def table_csv(schema: str, seed: int, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
        """Generic table under a '# <schema> seed=<seed>' line"""
        return ReportWriter._csv_text(f"{schema} seed={seed}", columns, rows)

    @staticmethod
    def read_table(text: str, schema: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
        """
        Parse a table written by table_csv, taking the columns from its header

        Raises:
            ReportFormatError: wrong schema line or ragged rows.
        """
        lines = text.splitlines(keepends=True)
        if len(lines) < 2:
            raise ReportFormatError("Report needs a schema line and a header row")
        header = next(csv.reader(lines[1:2]))
        return ReportWriter._parse_table(text, schema, header)

    @staticmethod
    def sweep_csv(rows: Sequence[Dict[str, Any]], task, seed: int) -> str:
        task = SweepTask(task)
        return ReportWriter._csv_text(
            f"{SWEEP_CSV_SCHEMA} seed={seed} task={task.value}", SWEEP_COLUMNS[task], rows
        )

    @staticmethod
    def sweep_document(rows: Sequence[Dict[str, Any]], task, seed: int) -> Dict[str, Any]:
        task = SweepTask(task)
        return {
            "schema": REPORT_SCHEMA,
            "kind": "sweep",
            "task": task.value,
            "seed": seed,
            "columns": list(SWEEP_COLUMNS[task]),
            "rows": [[row.get(column) for column in SWEEP_COLUMNS[task]] for row in rows],
        }

    @staticmethod
    def evidence_csv(report: EvidenceReport) -> str:
        """One row per refuted trial; the tallies go in the comment line"""
        comment = (
            f"{EVIDENCE_CSV_SCHEMA} seed={report.seed} scenario={report.scenario.value} "
            f"branch={report.branch.value} trials={report.trials} confirmed={report.confirmed} "
            f"refuted={len(report.refuted)} inconclusive={report.inconclusive}"
        )
        rows = []
        for record in report.refuted:
            row: Dict[str, Any] = {
                "trial_index": record.trial_index,
                "trial_seed": record.trial_seed,
                "expected": record.expected,
                "matched": record.verdict.matched_label,
                "distance": record.verdict.distance,
                "converged": record.verdict.converged,
                "steps": record.verdict.steps_used,
                "status": record.verdict.status.value,
            }
            row.update(record.params.as_dict())
            row.update({f"{c}0": value for c, value in zip(COORD_NAMES, record.start.as_tuple())})
            row.update({f"{c}_final": value for c, value in zip(COORD_NAMES, record.final)})
            rows.append(row)
        return ReportWriter._csv_text(comment, EVIDENCE_COLUMNS, rows)

    @staticmethod
    def json_text(document: Dict[str, Any]) -> str:
        if document.get("schema") != REPORT_SCHEMA:
            raise ReportFormatError(f"JSON documents must carry schema {REPORT_SCHEMA!r}")
        return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"

    @staticmethod
    def save(text: str, output_path: str) -> bool:
        """
        Write text to output_path as UTF-8

        Returns:
            True if successful, False otherwise
        """
        logger.info(f"Writing report to {output_path}")
        try:
            directory = os.path.dirname(output_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(output_path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            return True
        except OSError as e:
            logger.error(f"Error writing report to {output_path}: {e}")
            return False

    @staticmethod
    def _parse_comment(line: str, schema: str) -> Dict[str, str]:
        prefix = f"# {schema}"
        if not line.startswith(prefix):
            raise ReportFormatError(f"Expected a '{prefix}' header line, got {line.strip()!r}")
        meta = {}
        for token in line[len(prefix):].split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ReportFormatError(f"Malformed header token {token!r}")
            meta[key] = value
        if "seed" not in meta:
            raise ReportFormatError("Header line carries no seed")
        return meta

    @staticmethod
    def _parse_table(text: str, schema: str, columns: Sequence[str]) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
        lines = text.splitlines(keepends=True)
        if not lines:
            raise ReportFormatError("Empty report")
        meta = ReportWriter._parse_comment(lines[0], schema)
        reader = csv.reader(lines[1:])
        header = next(reader, None)
        if header is None or tuple(header) != tuple(columns):
            raise ReportFormatError(f"Unexpected header {header}")
        rows = []
        for number, record in enumerate(reader, start=3):
            if len(record) != len(columns):
                raise ReportFormatError(f"Line {number} has {len(record)} fields, expected {len(columns)}")
            rows.append(dict(zip(columns, record)))
        return meta, rows

    @staticmethod
    def _check_numbers(rows: Sequence[Dict[str, str]], names: Sequence[str]) -> None:
        for row in rows:
            for name in names:
                if row[name] == "":
                    continue
                try:
                    value = float(row[name])
                except ValueError:
                    raise ReportFormatError(f"Column {name} holds non-numeric {row[name]!r}")
                if not math.isfinite(value):
                    raise ReportFormatError(f"Column {name} holds non-finite {row[name]!r}")

    @staticmethod
    def read_sweep_csv(text: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
        """
        Parse a sweep CSV; returns (header metadata, rows as strings)

        Raises:
            ReportFormatError: the text does not follow the sweep schema.
        """
        first = text.split("\n", 1)[0]
        meta = ReportWriter._parse_comment(first, SWEEP_CSV_SCHEMA)
        try:
            task = SweepTask(meta.get("task"))
        except ValueError:
            raise ReportFormatError(f"Unknown sweep task {meta.get('task')!r}")
        meta, rows = ReportWriter._parse_table(text, SWEEP_CSV_SCHEMA, SWEEP_COLUMNS[task])
        ReportWriter._check_numbers(rows, ("cell",) + PARAM_NAMES)
        return meta, rows

    @staticmethod
    def read_evidence_csv(text: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
        """
        Parse an evidence CSV and check that its tallies add up

        Raises:
            ReportFormatError: the text does not follow the evidence schema.
        """
        meta, rows = ReportWriter._parse_table(text, EVIDENCE_CSV_SCHEMA, EVIDENCE_COLUMNS)
        try:
            tallies = {name: int(meta[name]) for name in _EVIDENCE_TALLIES}
        except (KeyError, ValueError) as e:
            raise ReportFormatError(f"Missing or malformed tally in header: {e}")
        if tallies["trials"] != tallies["confirmed"] + tallies["refuted"] + tallies["inconclusive"]:
            raise ReportFormatError(f"Tallies do not add up: {tallies}")
        if tallies["refuted"] != len(rows):
            raise ReportFormatError(f"Header lists {tallies['refuted']} refuted trials, found {len(rows)} rows")
        ReportWriter._check_numbers(rows, EVIDENCE_COLUMNS[:2 + len(PARAM_NAMES) + 8])
        return meta, rows

    @staticmethod
    def read_json(text: str) -> Dict[str, Any]:
        """
        Raises:
            ReportFormatError: invalid JSON or a schema other than sisi-report/1.
        """
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ReportFormatError(f"Invalid JSON: {e}") from e
        if not isinstance(document, dict) or document.get("schema") != REPORT_SCHEMA:
            raise ReportFormatError(f"Document does not declare schema {REPORT_SCHEMA!r}")
        if "seed" not in document:
            raise ReportFormatError("Document carries no seed")
        if document.get("kind") == "evidence":
            refuted = document.get("refuted", [])
            if document["trials"] != document["confirmed"] + len(refuted) + document["inconclusive"]:
                raise ReportFormatError("Evidence tallies do not add up")
        if document.get("kind") == "sweep":
            width = len(document.get("columns", []))
            if any(len(row) != width for row in document.get("rows", [])):
                raise ReportFormatError("Sweep rows do not match the column list")
        return document
