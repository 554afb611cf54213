#!/usr/bin/env python3
"""
SISI Operator Toolkit - Main Module

Command-line entry point. Each subcommand wraps one operation of the sisi
package:

    validate      check the QSO conditions for a parameter set
    step          apply V once to a point
    simulate      iterate V from a point until convergence
    fixed-points  enumerate Fix(V)
    classify      spectral classification of fixed points
    evidence      Monte-Carlo evidence for a convergence scenario
    sweep         evaluate a task over a parameter grid

Exit codes: 0 on success, 1 on domain errors, 2 on usage errors.
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import config
from sisi.dynamics import (
    COORD_NAMES,
    PARAM_NAMES,
    QSO_CONDITIONS,
    Params,
    SimplexPoint,
    apply,
    iterate_trajectory,
    validate_params,
)
from sisi.errors import InvalidScenarioConfig, SisiError
from sisi.fixed_points import enumerate_fixed_points
from sisi.harness import MAX_SEED, Branch, Budgets, Harness, Scenario, SweepGrid, SweepTask, detect_limit
from sisi.stability import classify_fixed_point
from utils.database import ResultStore
from utils.report_writer import ReportWriter

logger = logging.getLogger(__name__)

# Types of every long flag; config files are converted with the same functions
FLAG_TYPES: Dict[str, Callable[[Any], Any]] = {
    **{name: float for name in PARAM_NAMES},
    "params": str,
    "start": str,
    "max_iters": int,
    "tol": float,
    "seed": int,
    "trials": int,
    "scenario": str,
    "grid": str,
    "out": str,
    "format": str,
    "task": str,
    "branch": str,
    "store": str,
}

FORMATS = ("text", "csv", "json")


def setup_logging(level: str) -> None:
    """Log to stderr, and to a timestamped file when LOGGING names a directory"""
    root = logging.getLogger()
    # basicConfig is a no-op once the root logger has handlers
    if not root.handlers:
        handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
        log_directory = config.LOGGING.get("log_directory")
        if log_directory:
            os.makedirs(log_directory, exist_ok=True)
            handlers.append(
                logging.FileHandler(os.path.join(log_directory, f"sisi_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"))
            )
        logging.basicConfig(
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=handlers,
        )
    root.setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the long flags")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    common.add_argument("--out", help="write machine output to this file")
    common.add_argument("--format", choices=FORMATS, help="output format (default text)")
    common.add_argument("--seed", type=int, help="64-bit unsigned seed recorded in machine output")

    params = argparse.ArgumentParser(add_help=False)
    for name in PARAM_NAMES:
        params.add_argument(f"--{name}", type=float)
    params.add_argument("--params", help="b,alpha,beta1,beta2,k1,k2")

    start = argparse.ArgumentParser(add_help=False)
    start.add_argument("--start", help="x,u,y,v")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--max-iters", dest="max_iters", type=int)
    budget.add_argument("--tol", type=float, help="convergence tolerance on the sup-norm step difference")

    store = argparse.ArgumentParser(add_help=False)
    store.add_argument("--store", help="SQLite file to log the run in")

    parser = argparse.ArgumentParser(prog="sisi", description="Discrete-time SISI epidemic operator toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    sub.add_parser("validate", parents=[common, params], help="check the QSO conditions")
    sub.add_parser("step", parents=[common, params, start], help="apply V once")
    sub.add_parser("simulate", parents=[common, params, start, budget], help="iterate V to convergence")
    sub.add_parser("fixed-points", parents=[common, params], help="enumerate Fix(V)")
    sub.add_parser("classify", parents=[common, params, start], help="classify fixed points")

    evidence = sub.add_parser("evidence", parents=[common, params, budget, store], help="scenario evidence")
    evidence.add_argument("--scenario", choices=[s.value for s in Scenario])
    evidence.add_argument("--trials", type=int)
    evidence.add_argument("--branch", choices=[b.value for b in Branch])

    sweep = sub.add_parser("sweep", parents=[common, budget, store], help="parameter sweep")
    sweep.add_argument("--grid", help="JSON grid description")
    sweep.add_argument("--task", choices=[t.value for t in SweepTask])

    return parser


def apply_config_file(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill flags left unset from the JSON config file"""
    try:
        with open(args.config, encoding="utf-8") as f:
            values = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        parser.error(f"cannot read config file {args.config}: {e}")
    if not isinstance(values, dict):
        parser.error("config file must hold a JSON object")
    for key, value in values.items():
        if key not in FLAG_TYPES:
            parser.error(f"unknown config key {key!r}")
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue
        try:
            setattr(args, key, FLAG_TYPES[key](value))
        except (TypeError, ValueError):
            parser.error(f"config key {key!r} has invalid value {value!r}")


def check_usage(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if getattr(args, "max_iters", None) is not None and args.max_iters < 1:
        parser.error("--max-iters must be at least 1")
    if getattr(args, "tol", None) is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    if getattr(args, "trials", None) is not None and args.trials < 0:
        parser.error("--trials must be nonnegative")
    if args.seed is not None and not 0 <= args.seed <= MAX_SEED:
        parser.error(f"--seed must lie in [0, {MAX_SEED}]")
    if args.format is not None and args.format not in FORMATS:
        parser.error(f"--format must be one of {', '.join(FORMATS)}")
    for key, choices in (("scenario", Scenario), ("branch", Branch), ("task", SweepTask)):
        value = getattr(args, key, None)
        if value is not None and value not in {c.value for c in choices}:
            parser.error(f"invalid {key} {value!r}")
    if args.command in ("step", "simulate") and not args.start:
        parser.error(f"{args.command} needs --start")
    if args.command == "evidence" and not args.scenario:
        parser.error("evidence needs --scenario")
    if args.command == "sweep" and not args.grid:
        parser.error("sweep needs --grid")


def partial_params(args: argparse.Namespace) -> Dict[str, float]:
    """Values from --params, overridden by individual flags"""
    values: Dict[str, float] = {}
    if getattr(args, "params", None):
        values.update(Params.from_string(args.params).as_dict())
    for name in PARAM_NAMES:
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    return values


def resolve_params(parser: argparse.ArgumentParser, args: argparse.Namespace) -> Params:
    values = partial_params(args)
    missing = [name for name in PARAM_NAMES if name not in values]
    if missing:
        parser.error(f"missing parameter(s): {', '.join(missing)} (use --params or individual flags)")
    return Params(**values)


def output_format(args: argparse.Namespace) -> str:
    if args.format:
        return args.format
    if args.out:
        return "json" if args.out.endswith(".json") else "csv"
    return "text"


def emit(args: argparse.Namespace, summary: List[str], csv_text: Callable[[], str], document: Callable[[], Dict]) -> int:
    """Print the summary and/or write machine output; returns the exit code"""
    fmt = output_format(args)
    if fmt == "text" or args.out:
        print("\n".join(summary))
    if fmt == "text":
        return 0
    text = csv_text() if fmt == "csv" else ReportWriter.json_text(document())
    if args.out:
        return 0 if ReportWriter.save(text, args.out) else 1
    sys.stdout.write(text)
    return 0


def run_seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else config.HARNESS["seed"]


def fmt_point(coords) -> str:
    return "(" + ", ".join(f"{c:.10g}" for c in coords) + ")"


def cmd_validate(parser, args) -> int:
    p = resolve_params(parser, args)
    report = validate_params(p)
    violated = {v.condition: v for v in report.violations}
    summary = [f"QSO: {'yes' if report.is_qso else 'no'}"]
    summary += [f"  violated: {v.condition} (value {v.value:.10g})" for v in report.violations]
    if report.is_identity:
        summary.append("V is the identity operator")

    rows = [
        {"condition": name, "value": lhs(p), "bound": bound, "violated": name in violated}
        for name, lhs, bound in QSO_CONDITIONS
    ]
    seed = run_seed(args)
    return emit(
        args,
        summary,
        lambda: ReportWriter.table_csv("sisi-validation/1", seed, ("condition", "value", "bound", "violated"), rows),
        lambda: {
            "schema": "sisi-report/1",
            "kind": "validation",
            "seed": seed,
            "params": p.as_dict(),
            "is_qso": report.is_qso,
            "is_identity": report.is_identity,
            "violations": [{"condition": v.condition, "value": v.value, "bound": v.bound} for v in report.violations],
        },
    )


def cmd_step(parser, args) -> int:
    p = resolve_params(parser, args)
    start = SimplexPoint.from_string(args.start)
    image = apply(p, start)
    seed = run_seed(args)
    row = dict(zip(COORD_NAMES, image.as_tuple()))
    return emit(
        args,
        [f"V{fmt_point(start.as_tuple())} = {fmt_point(image.as_tuple())}"],
        lambda: ReportWriter.table_csv("sisi-step/1", seed, COORD_NAMES, [row]),
        lambda: {"schema": "sisi-report/1", "kind": "step", "seed": seed, "params": p.as_dict(), "image": row},
    )


def cmd_simulate(parser, args) -> int:
    p = resolve_params(parser, args)
    start = SimplexPoint.from_string(args.start)
    max_iters = args.max_iters if args.max_iters is not None else config.DYNAMICS["max_iters"]
    tol = args.tol if args.tol is not None else config.DYNAMICS["tol_conv"]
    t = iterate_trajectory(p, start, max_iters=max_iters, tol_conv=tol)
    verdict = detect_limit(t, enumerate_fixed_points(p).candidates(), config.HARNESS["tol_match"])

    summary = [
        f"status: {t.status.value} after {t.at_step} step(s)",
        f"final state: {fmt_point(t.final_state)}",
    ]
    if verdict.matched_label:
        summary.append(f"limit: {verdict.matched_label} (distance {verdict.distance:.3g})")

    seed = run_seed(args)
    rows = [
        {"step": int(step), **dict(zip(COORD_NAMES, (float(c) for c in state)))}
        for step, state in zip(t.steps, t.iterates)
    ]
    return emit(
        args,
        summary,
        lambda: ReportWriter.table_csv(
            f"sisi-trajectory/1 status={t.status.value}", seed, ("step",) + COORD_NAMES, rows
        ),
        lambda: {
            "schema": "sisi-report/1",
            "kind": "trajectory",
            "seed": seed,
            "params": p.as_dict(),
            "start": list(start.as_tuple()),
            "status": t.status.value,
            "steps_used": t.at_step,
            "limit": verdict.matched_label,
            "iterates": rows,
        },
    )


def cmd_fixed_points(parser, args) -> int:
    p = resolve_params(parser, args)
    fixed = enumerate_fixed_points(p)
    summary = [f"case: {fixed.case_tag}"]
    for record in fixed.isolated:
        summary.append(f"  {record.label}: {fmt_point(record.point.as_tuple())}")
    for record in fixed.faces:
        summary.append(f"  {record.label}: face {record.face.describe()}")
    if fixed.root is not None:
        if fixed.root.found:
            summary.append(
                f"A = {fixed.root.A:.10g} (case {fixed.root.case.value}, {fixed.root.method.value}, "
                f"residual {fixed.root.residual:.3g})"
            )
        else:
            summary.append(f"no positive root: {fixed.root.reason}")

    seed = run_seed(args)
    rows = [
        {
            "label": record.label,
            **dict(zip(COORD_NAMES, record.point.as_tuple())),
            "fixedness_residual": record.fixedness_residual,
            "face": record.face.describe() if record.is_face else None,
        }
        for record in fixed.candidates()
    ]
    columns = ("label",) + COORD_NAMES + ("fixedness_residual", "face")
    root = fixed.root
    return emit(
        args,
        summary,
        lambda: ReportWriter.table_csv("sisi-fixed-points/1", seed, columns, rows),
        lambda: {
            "schema": "sisi-report/1",
            "kind": "fixed_points",
            "seed": seed,
            "params": p.as_dict(),
            "case_tag": fixed.case_tag,
            "fixed_points": rows,
            "root": None if root is None else {
                "outcome": root.outcome.value,
                "case": root.case.value,
                "A": root.A,
                "method": root.method.value if root.method else None,
                "residual": root.residual,
                "reason": root.reason,
            },
        },
    )


def cmd_classify(parser, args) -> int:
    p = resolve_params(parser, args)
    if args.start:
        targets = [("start", SimplexPoint.from_string(args.start))]
    else:
        targets = [(record.label, record.point) for record in enumerate_fixed_points(p).candidates()]

    summary, rows = [], []
    for label, point in targets:
        result = classify_fixed_point(p, point)
        moduli = ", ".join(f"{m:.6g}" for m in result.spectrum.moduli)
        summary.append(f"{label}: {result.kind.value} (|mu| = {moduli})")
        row = {"label": label, "classification": result.kind.value, "spectral_radius": result.spectrum.spectral_radius}
        for i, z in enumerate(result.spectrum.eigenvalues, start=1):
            row[f"mu{i}_re"], row[f"mu{i}_im"] = z.real, z.imag
        rows.append(row)

    seed = run_seed(args)
    columns = ("label", "classification", "spectral_radius") + tuple(
        f"mu{i}_{part}" for i in range(1, 5) for part in ("re", "im")
    )
    return emit(
        args,
        summary,
        lambda: ReportWriter.table_csv("sisi-classification/1", seed, columns, rows),
        lambda: {"schema": "sisi-report/1", "kind": "classification", "seed": seed, "params": p.as_dict(), "points": rows},
    )


def cmd_evidence(parser, args) -> int:
    harness = Harness(config)
    sampler = harness.sampler(
        args.scenario,
        branch=args.branch or Branch.ANY.value,
        fixed=partial_params(args),
    )
    budgets = Budgets.from_config(config, max_iters=args.max_iters, tol_conv=args.tol)
    trials = args.trials if args.trials is not None else 100
    report = harness.gather_evidence(args.scenario, sampler, trials, budgets, seed=args.seed)

    if args.store:
        ResultStore(config, db_path=args.store).save_evidence(report)

    summary = [
        f"scenario: {report.scenario.value} ({report.branch.value})",
        f"trials: {report.trials}, confirmed: {report.confirmed}, "
        f"refuted: {len(report.refuted)}, inconclusive: {report.inconclusive}",
    ]
    for record in report.refuted:
        summary.append(
            f"  refuted trial {record.trial_index} (seed {record.trial_seed}): expected {record.expected}, "
            f"got {record.verdict.matched_label or record.verdict.status.value}"
        )
    return emit(args, summary, lambda: ReportWriter.evidence_csv(report), report.to_dict)


def cmd_sweep(parser, args) -> int:
    try:
        with open(args.grid, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidScenarioConfig(f"Cannot read grid file {args.grid}: {e}") from e
    if not isinstance(data, dict):
        raise InvalidScenarioConfig("Grid file must hold a JSON object")
    task = args.task or data.get("task")
    if not task:
        parser.error("sweep needs --task or a task entry in the grid file")
    try:
        task = SweepTask(task)
    except ValueError:
        parser.error(f"unknown sweep task {task!r}")

    grid = SweepGrid.from_dict(data)
    budgets = Budgets.from_config(config, max_iters=args.max_iters, tol_conv=args.tol)
    rows = Harness(config).run_sweep(grid, task, budgets)
    seed = grid.initial_points.seed if grid.initial_points else run_seed(args)

    if args.store:
        ResultStore(config, db_path=args.store).save_sweep(rows, task, seed)

    errors = sum(1 for row in rows if row["error"])
    summary = [f"sweep {task.value}: {len(grid.cells())} cell(s), {len(rows)} row(s), {errors} error(s)"]
    if output_format(args) == "text":
        for row in rows:
            values = ", ".join(f"{k}={ReportWriter.format_value(v)}" for k, v in row.items() if v is not None)
            summary.append(f"  {values}")
    return emit(
        args,
        summary,
        lambda: ReportWriter.sweep_csv(rows, task, seed),
        lambda: ReportWriter.sweep_document(rows, task, seed),
    )


COMMANDS = {
    "validate": cmd_validate,
    "step": cmd_step,
    "simulate": cmd_simulate,
    "fixed-points": cmd_fixed_points,
    "classify": cmd_classify,
    "evidence": cmd_evidence,
    "sweep": cmd_sweep,
}


def run_command(argv: Optional[List[str]] = None) -> int:
    """Parse argv, dispatch, and return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            apply_config_file(parser, args)
        check_usage(parser, args)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.log_level or config.LOGGING.get("level", "WARNING"))
    logger.info(f"Running {args.command}")

    try:
        return COMMANDS[args.command](parser, args)
    except SystemExit as e:
        return int(e.code or 0)
    except SisiError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    try:
        sys.exit(run_command())
    except Exception as e:
        logger.critical(f"Unhandled exception: {e}", exc_info=True)
        sys.exit(1)
