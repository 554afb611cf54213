#!/usr/bin/env python3
"""
Result Store

SQLite log of evidence and sweep runs, their counterexamples, and daily run
statistics.
"""

import json
import logging
import os
import sqlite3
from datetime import datetime, timedelta
from typing import Any, Dict, List, Optional, Sequence

from sisi.harness import EvidenceReport, SweepTask

logger = logging.getLogger(__name__)


class ResultStore:
    """Utility for persisting harness results"""

    def __init__(self, config, db_path: Optional[str] = None):
        """Initialize with configuration; db_path overrides STORAGE["database_path"]"""
        self.config = config
        self.db_path = db_path or config.STORAGE.get("database_path", "data/sisi_results.sqlite")
        self.backup_directory = config.STORAGE.get("backup_directory", "data/backups")

        directory = os.path.dirname(self.db_path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        self._init_database()

        logger.info(f"ResultStore initialized at {self.db_path}")

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        return conn

    def _init_database(self) -> None:
        """Initialize database schema if it doesn't exist"""
        conn = self._connect()
        cursor = conn.cursor()

        cursor.execute('''
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            kind TEXT NOT NULL,
            label TEXT NOT NULL,
            seed TEXT NOT NULL,
            created TEXT NOT NULL,
            trials INTEGER,
            confirmed INTEGER,
            refuted INTEGER,
            inconclusive INTEGER,
            row_count INTEGER,
            error_count INTEGER,
            data TEXT
        )
        ''')

        # seeds are unsigned 64-bit, wider than SQLite integers
        cursor.execute('''
        CREATE TABLE IF NOT EXISTS counterexamples (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id INTEGER NOT NULL,
            trial_index INTEGER NOT NULL,
            trial_seed TEXT NOT NULL,
            params TEXT NOT NULL,
            start TEXT NOT NULL,
            final TEXT NOT NULL,
            expected TEXT NOT NULL,
            matched TEXT,
            status TEXT NOT NULL,
            FOREIGN KEY (run_id) REFERENCES runs (id)
        )
        ''')

        cursor.execute('''
        CREATE TABLE IF NOT EXISTS statistics (
            date TEXT PRIMARY KEY,
            evidence_runs INTEGER DEFAULT 0,
            sweep_runs INTEGER DEFAULT 0,
            trials_run INTEGER DEFAULT 0,
            refutations INTEGER DEFAULT 0
        )
        ''')

        conn.commit()
        conn.close()

    def save_evidence(self, report: EvidenceReport) -> int:
        """
        Save an evidence report and its counterexamples

        Returns:
            ID of the run, or -1 if failed
        """
        logger.info(f"Saving evidence run for {report.scenario.value} ({report.trials} trials)")

        try:
            conn = self._connect()
            cursor = conn.cursor()

            document = report.to_dict()
            cursor.execute(
                '''
                INSERT INTO runs (kind, label, seed, created, trials, confirmed, refuted, inconclusive, data)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
                ''',
                (
                    "evidence",
                    report.scenario.value,
                    str(report.seed),
                    datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
                    report.trials,
                    report.confirmed,
                    len(report.refuted),
                    report.inconclusive,
                    json.dumps({"branch": document["branch"], "budgets": document["budgets"]}, sort_keys=True),
                ),
            )
            run_id = cursor.lastrowid

            for record in report.refuted:
                cursor.execute(
                    '''
                    INSERT INTO counterexamples
                        (run_id, trial_index, trial_seed, params, start, final, expected, matched, status)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
                    ''',
                    (
                        run_id,
                        record.trial_index,
                        str(record.trial_seed),
                        json.dumps(record.params.as_dict(), sort_keys=True),
                        json.dumps(list(record.start.as_tuple())),
                        json.dumps(list(record.final)),
                        record.expected,
                        record.verdict.matched_label,
                        record.verdict.status.value,
                    ),
                )

            conn.commit()
            conn.close()

            self._update_statistic("evidence_runs")
            self._update_statistic("trials_run", report.trials)
            if report.refuted:
                self._update_statistic("refutations", len(report.refuted))

            return run_id

        except sqlite3.Error as e:
            logger.error(f"Error saving evidence run: {e}")
            return -1

    def save_sweep(self, rows: Sequence[Dict[str, Any]], task, seed: int) -> int:
        """
        Save a sweep summary (row and error counts)

        Returns:
            ID of the run, or -1 if failed
        """
        task = SweepTask(task)
        logger.info(f"Saving sweep run ({task.value}, {len(rows)} rows)")

        try:
            conn = self._connect()
            cursor = conn.cursor()
            cursor.execute(
                '''
                INSERT INTO runs (kind, label, seed, created, row_count, error_count)
                VALUES (?, ?, ?, ?, ?, ?)
                ''',
                (
                    "sweep",
                    task.value,
                    str(seed),
                    datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
                    len(rows),
                    sum(1 for row in rows if row.get("error")),
                ),
            )
            run_id = cursor.lastrowid
            conn.commit()
            conn.close()

            self._update_statistic("sweep_runs")
            return run_id

        except sqlite3.Error as e:
            logger.error(f"Error saving sweep run: {e}")
            return -1

    def get_runs(self, kind: Optional[str] = None, limit: int = 100) -> List[Dict[str, Any]]:
        """Most recent runs first, optionally filtered by kind ('evidence' or 'sweep')"""
        try:
            conn = self._connect()
            cursor = conn.cursor()
            if kind:
                cursor.execute("SELECT * FROM runs WHERE kind = ? ORDER BY id DESC LIMIT ?", (kind, limit))
            else:
                cursor.execute("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,))
            runs = [dict(row) for row in cursor.fetchall()]
            conn.close()
            return runs

        except sqlite3.Error as e:
            logger.error(f"Error getting runs: {e}")
            return []

    def get_counterexamples(self, run_id: int) -> List[Dict[str, Any]]:
        try:
            conn = self._connect()
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM counterexamples WHERE run_id = ? ORDER BY trial_index", (run_id,))
            records = []
            for row in cursor.fetchall():
                record = dict(row)
                record["trial_seed"] = int(record["trial_seed"])
                for key in ("params", "start", "final"):
                    record[key] = json.loads(record[key])
                records.append(record)
            conn.close()
            return records

        except sqlite3.Error as e:
            logger.error(f"Error getting counterexamples: {e}")
            return []

    def get_statistics(self, days: int = 30) -> List[Dict[str, Any]]:
        """Daily statistics for the last `days` days"""
        try:
            conn = self._connect()
            cursor = conn.cursor()
            start_date = (datetime.now() - timedelta(days=days - 1)).strftime("%Y-%m-%d")
            cursor.execute("SELECT * FROM statistics WHERE date >= ? ORDER BY date", (start_date,))
            stats = [dict(row) for row in cursor.fetchall()]
            conn.close()
            return stats

        except sqlite3.Error as e:
            logger.error(f"Error getting statistics: {e}")
            return []

    def _update_statistic(self, field: str, increment: int = 1) -> None:
        """
        Update a statistic for the current date

        Args:
            field: Field to update
            increment: Value to increment by
        """
        try:
            conn = self._connect()
            cursor = conn.cursor()

            today = datetime.now().strftime("%Y-%m-%d")

            try:
                cursor.execute(f"INSERT INTO statistics (date, {field}) VALUES (?, ?)", (today, increment))
            except sqlite3.IntegrityError:
                cursor.execute(f"UPDATE statistics SET {field} = {field} + ? WHERE date = ?", (increment, today))

            conn.commit()
            conn.close()

        except sqlite3.Error as e:
            logger.error(f"Error updating statistic: {e}")

    def backup_database(self) -> str:
        """
        Create a backup of the database

        Returns:
            Path to the backup file, or empty string if failed
        """
        logger.info("Creating database backup")

        try:
            os.makedirs(self.backup_directory, exist_ok=True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            backup_path = os.path.join(self.backup_directory, f"backup_{timestamp}.sqlite")

            source_conn = sqlite3.connect(self.db_path)
            backup_conn = sqlite3.connect(backup_path)
            source_conn.backup(backup_conn)
            source_conn.close()
            backup_conn.close()

            logger.info(f"Database backup created at {backup_path}")
            return backup_path

        except (OSError, sqlite3.Error) as e:
            logger.error(f"Error creating database backup: {e}")
            return ""
