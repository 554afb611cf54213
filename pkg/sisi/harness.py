#!/usr/bin/env python3
"""
Analysis Harness

Batch experiments on top of the operator: matching trajectory limits against
enumerated fixed points, Monte-Carlo evidence for the convergence scenarios,
and parameter sweeps over grids of parameter values.

Every trial and grid cell is seeded from (seed, index) alone, so results are
reproducible and independent of how the work is scheduled.
"""

import itertools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from config import HARNESS
from sisi.dynamics import (
    PARAM_NAMES,
    Params,
    SimplexPoint,
    Trajectory,
    TrajectoryStatus,
    iterate_trajectory,
    random_simplex_points,
    validate_params,
)
from sisi.errors import InvalidScenarioConfig, SisiError
from sisi.fixed_points import FACES, FixedPointRecord, build_lambda16, enumerate_fixed_points
from sisi.stability import classify_fixed_point

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "sisi-report/1"
MAX_SEED = 2**64 - 1


class Scenario(str, Enum):
    CONJECTURE1 = "conjecture1"
    CONJECTURE2 = "conjecture2"
    THEOREM3 = "theorem3"
    THEOREM2_LOCAL = "theorem2-local"

    @property
    def theorem_backed(self) -> bool:
        """Refutations in these scenarios are failures, not findings"""
        return self in (Scenario.THEOREM3, Scenario.THEOREM2_LOCAL)


class Branch(str, Enum):
    EXTINCTION = "extinction"  # beta1*k1 <= b+alpha
    ENDEMIC = "endemic"        # beta1*k1 > b+alpha
    ANY = "any"


class SweepTask(str, Enum):
    FIXED_POINTS = "fixed_points"
    CLASSIFY = "classify"
    LIMIT = "limit"


class TrialOutcome(str, Enum):
    CONFIRMED = "confirmed"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


# Parameters each scenario pins to zero and requires to be positive
_REQUIRED_ZERO = {
    Scenario.CONJECTURE1: ("beta2",),
    Scenario.CONJECTURE2: (),
    Scenario.THEOREM3: ("k2",),
    Scenario.THEOREM2_LOCAL: ("beta2",),
}
_REQUIRED_POSITIVE = {
    Scenario.CONJECTURE1: ("b", "alpha"),
    Scenario.CONJECTURE2: ("b", "alpha", "beta1", "beta2", "k1"),
    Scenario.THEOREM3: ("b", "alpha"),
    Scenario.THEOREM2_LOCAL: ("b", "alpha", "beta1", "k1"),
}

SWEEP_COLUMNS: Dict[SweepTask, Tuple[str, ...]] = {
    SweepTask.FIXED_POINTS: ("cell",) + PARAM_NAMES + (
        "labels", "case_tag", "root_outcome", "A", "residual", "error",
    ),
    SweepTask.CLASSIFY: ("cell",) + PARAM_NAMES + (
        "label", "classification", "spectral_radius", "error",
    ),
    SweepTask.LIMIT: ("cell",) + PARAM_NAMES + (
        "start_index", "x0", "u0", "y0", "v0", "limit_label", "distance", "steps", "status", "error",
    ),
}


def trial_seed(seed: int, index: int) -> int:
    """64-bit seed of trial (or grid cell) index under the run seed"""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def endemic(p: Params) -> bool:
    return p.beta1 * p.k1 > p.b + p.alpha


@dataclass(frozen=True)
class Budgets:
    max_iters: int
    tol_conv: float
    tol_match: float

    def __post_init__(self):
        object.__setattr__(self, "max_iters", int(self.max_iters))
        if self.max_iters < 1:
            raise InvalidScenarioConfig(f"max_iters must be at least 1, got {self.max_iters}")
        if not (self.tol_conv > 0 and self.tol_match > 0):
            raise InvalidScenarioConfig("tol_conv and tol_match must be positive")

    @classmethod
    def from_config(cls, config, **overrides) -> "Budgets":
        values = {key: config.HARNESS[key] for key in ("max_iters", "tol_conv", "tol_match")}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass(frozen=True)
class LimitVerdict:
    """Where a trajectory ended and which candidate, if any, it matched"""
    matched_label: Optional[str]
    distance: Optional[float]
    converged: bool
    steps_used: int
    status: TrajectoryStatus


def _candidate_distance(record: FixedPointRecord, coords: Sequence[float], tol_match: float) -> Optional[float]:
    if record.is_face:
        if not record.face.contains(coords, tol_match):
            return None
        return record.face.distance(coords)
    return max(abs(a - b) for a, b in zip(coords, record.point.as_tuple()))


def detect_limit(t: Trajectory, candidates: Sequence[FixedPointRecord], tol_match: float) -> LimitVerdict:
    """
    Match the end of a converged trajectory to the nearest candidate within
    tol_match. Faces match when their pinned coordinates are below tol_match
    and the free ones form a point of the face.
    """
    if not t.converged:
        return LimitVerdict(None, None, False, t.steps_used, t.status)

    final = tuple(float(c) for c in t.final_state)
    best_label, best_distance = None, None
    for record in candidates:
        distance = _candidate_distance(record, final, tol_match)
        if distance is None or distance >= tol_match:
            continue
        if best_distance is None or distance < best_distance:
            best_label, best_distance = record.label, distance
    return LimitVerdict(best_label, best_distance, True, t.steps_used, t.status)


def predicted_limit(scenario: Scenario, p: Params, start: SimplexPoint) -> str:
    """Label of the limit the scenario asserts for this start"""
    if scenario is Scenario.THEOREM3:
        return "lambda1"
    if scenario is Scenario.THEOREM2_LOCAL:
        return "lambda16"
    if start.u + start.v == 0 or not endemic(p):
        return "lambda1"
    return "lambda16" if scenario is Scenario.CONJECTURE1 else "lambda17"


@dataclass(frozen=True)
class ParamSampler:
    """
    Uniform draws from a parameter box, rejected until they satisfy the QSO
    conditions, the scenario's side conditions and the requested branch.

    margin keeps beta1*k1 at least that far from b+alpha (0 keeps the
    boundary in the extinction branch).
    """
    scenario: Scenario
    branch: Branch = Branch.ANY
    fixed: Dict[str, float] = field(default_factory=dict)
    margin: float = HARNESS["margin"]
    box: Dict[str, Tuple[float, float]] = field(default_factory=lambda: dict(HARNESS["param_box"]))
    max_rejections: int = HARNESS["max_rejections"]

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "branch", Branch(self.branch))
        unknown = set(self.fixed) - set(PARAM_NAMES)
        if unknown:
            raise InvalidScenarioConfig(f"Unknown parameter(s) {sorted(unknown)}")
        for name, value in self.fixed.items():
            if not (math.isfinite(value) and value >= 0):
                raise InvalidScenarioConfig(f"Fixed {name} must be finite and nonnegative, got {value!r}")
        if self.margin < 0:
            raise InvalidScenarioConfig(f"margin must be nonnegative, got {self.margin}")

        for name in _REQUIRED_ZERO[self.scenario]:
            if self.fixed.get(name, 0.0) != 0.0:
                raise InvalidScenarioConfig(f"{self.scenario.value} needs {name} = 0, got {self.fixed[name]}")
        for name in _REQUIRED_POSITIVE[self.scenario]:
            if name in self.fixed and self.fixed[name] <= 0:
                raise InvalidScenarioConfig(f"{self.scenario.value} needs {name} > 0")
        if self.scenario is Scenario.THEOREM2_LOCAL:
            if self.branch is Branch.EXTINCTION:
                raise InvalidScenarioConfig("theorem2-local needs beta1*k1 > b+alpha")
            object.__setattr__(self, "branch", Branch.ENDEMIC)

        for name in PARAM_NAMES:
            if name in self.fixed or name in _REQUIRED_ZERO[self.scenario]:
                continue
            lo, hi = self.box.get(name, (None, None))
            if lo is None or not 0 <= lo <= hi:
                raise InvalidScenarioConfig(f"Parameter box for {name} must satisfy 0 <= min <= max")

        if all(name in self.fixed for name in ("b", "alpha", "beta1", "k1")):
            pinned = {name: self.fixed.get(name, 0.0) for name in PARAM_NAMES}
            if not self.in_branch(Params(**pinned)):
                raise InvalidScenarioConfig(
                    f"Fixed parameters {self.fixed} contradict branch {self.branch.value}"
                )

    def in_branch(self, p: Params) -> bool:
        gap = p.beta1 * p.k1 - (p.b + p.alpha)
        is_extinction = -gap >= self.margin
        is_endemic = gap > 0 and gap >= self.margin
        if self.branch is Branch.EXTINCTION:
            return is_extinction
        if self.branch is Branch.ENDEMIC:
            return is_endemic
        return is_extinction or is_endemic

    def accepts(self, p: Params) -> bool:
        if any(getattr(p, name) <= 0 for name in _REQUIRED_POSITIVE[self.scenario]):
            return False
        return self.in_branch(p) and validate_params(p).is_qso

    def draw(self, rng: np.random.Generator) -> Params:
        """
        Raises:
            InvalidScenarioConfig: no acceptable draw within max_rejections.
        """
        zeros = _REQUIRED_ZERO[self.scenario]
        for _ in range(self.max_rejections):
            values = {}
            for name in PARAM_NAMES:
                if name in self.fixed:
                    values[name] = self.fixed[name]
                elif name in zeros:
                    values[name] = 0.0
                else:
                    values[name] = rng.uniform(*self.box[name])
            p = Params(**values)
            if self.accepts(p):
                return p
        raise InvalidScenarioConfig(
            f"No parameters for {self.scenario.value}/{self.branch.value} after {self.max_rejections} draws"
        )


@dataclass(frozen=True)
class TrialRecord:
    """Everything needed to reproduce one trial"""
    trial_index: int
    trial_seed: int
    params: Params
    start: SimplexPoint
    final: Tuple[float, ...]
    expected: str
    verdict: LimitVerdict
    outcome: TrialOutcome

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trial_index": self.trial_index,
            "trial_seed": self.trial_seed,
            "params": self.params.as_dict(),
            "start": list(self.start.as_tuple()),
            "final": list(self.final),
            "expected": self.expected,
            "matched": self.verdict.matched_label,
            "distance": self.verdict.distance,
            "converged": self.verdict.converged,
            "steps": self.verdict.steps_used,
            "status": self.verdict.status.value,
            "outcome": self.outcome.value,
        }


@dataclass(frozen=True)
class EvidenceReport:
    scenario: Scenario
    branch: Branch
    seed: int
    trials: int
    confirmed: int
    refuted: Tuple[TrialRecord, ...]
    inconclusive: int
    budgets: Budgets

    def __post_init__(self):
        if self.trials != self.confirmed + len(self.refuted) + self.inconclusive:
            raise ValueError(
                f"Tallies do not add up: {self.trials} != "
                f"{self.confirmed} + {len(self.refuted)} + {self.inconclusive}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "kind": "evidence",
            "scenario": self.scenario.value,
            "branch": self.branch.value,
            "seed": self.seed,
            "trials": self.trials,
            "confirmed": self.confirmed,
            "inconclusive": self.inconclusive,
            "refuted": [record.to_dict() for record in self.refuted],
            "budgets": {
                "max_iters": self.budgets.max_iters,
                "tol_conv": self.budgets.tol_conv,
                "tol_match": self.budgets.tol_match,
            },
        }


@dataclass(frozen=True)
class InitialPointSpec:
    count: int
    seed: int


@dataclass(frozen=True)
class SweepGrid:
    """
    ranges maps a parameter to (min, max, steps); fixed gives the others.
    Every parameter must be covered by exactly one of the two.
    """
    ranges: Dict[str, Tuple[float, float, int]]
    fixed: Dict[str, float] = field(default_factory=dict)
    initial_points: Optional[InitialPointSpec] = None

    def __post_init__(self):
        overlap = set(self.ranges) & set(self.fixed)
        if overlap:
            raise InvalidScenarioConfig(f"Parameters both swept and fixed: {sorted(overlap)}")
        covered = set(self.ranges) | set(self.fixed)
        unknown = covered - set(PARAM_NAMES)
        if unknown:
            raise InvalidScenarioConfig(f"Unknown parameter(s) {sorted(unknown)}")
        missing = set(PARAM_NAMES) - covered
        if missing:
            raise InvalidScenarioConfig(f"Parameters neither swept nor fixed: {sorted(missing)}")
        for name, (lo, hi, steps) in self.ranges.items():
            if int(steps) < 1:
                raise InvalidScenarioConfig(f"{name}: steps must be at least 1, got {steps}")
            if lo > hi:
                raise InvalidScenarioConfig(f"{name}: min {lo} exceeds max {hi}")
        if self.initial_points is not None and self.initial_points.count < 0:
            raise InvalidScenarioConfig("initial point count must be nonnegative")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepGrid":
        """Build from the grid-file layout {"ranges": {name: [min, max, steps]}, "fixed": {...}, "initial_points": {...}}"""
        try:
            ranges = {name: (float(lo), float(hi), int(steps)) for name, (lo, hi, steps) in data.get("ranges", {}).items()}
            fixed = {name: float(value) for name, value in data.get("fixed", {}).items()}
            points = data.get("initial_points")
            initial = InitialPointSpec(int(points["count"]), int(points.get("seed", 0))) if points else None
        except (TypeError, ValueError, KeyError) as e:
            raise InvalidScenarioConfig(f"Malformed grid description: {e}") from e
        return cls(ranges=ranges, fixed=fixed, initial_points=initial)

    def values(self, name: str) -> List[float]:
        if name in self.fixed:
            return [self.fixed[name]]
        lo, hi, steps = self.ranges[name]
        if steps == 1:
            return [lo]
        return [float(v) for v in np.linspace(lo, hi, int(steps))]

    def cells(self) -> List[Dict[str, float]]:
        """Raw parameter values of every cell, last parameter varying fastest"""
        axes = [self.values(name) for name in PARAM_NAMES]
        return [dict(zip(PARAM_NAMES, combo)) for combo in itertools.product(*axes)]


# Worker payloads are plain picklable data so they can run in a process pool


@dataclass(frozen=True)
class _TrialJob:
    index: int
    seed: int
    sampler: ParamSampler
    budgets: Budgets
    exclusion_radius: float
    max_redraws: int
    local_radius: float


@dataclass(frozen=True)
class _CellJob:
    index: int
    values: Dict[str, float]
    task: SweepTask
    budgets: Budgets
    initial_points: Optional[InitialPointSpec]


def _near_fixed_set(coords: Sequence[float], candidates: Sequence[FixedPointRecord], radius: float) -> bool:
    for record in candidates:
        if record.is_face:
            if record.face.distance(coords) < radius:
                return True
        elif max(abs(a - b) for a, b in zip(coords, record.point.as_tuple())) < radius:
            return True
    return False


def _propose_start(scenario: Scenario, p: Params, rng: np.random.Generator, local_radius: float) -> np.ndarray:
    if scenario is Scenario.THEOREM2_LOCAL:
        w = random_simplex_points(rng, 1)[0]
        eps = rng.uniform(0.0, local_radius)
        return (1.0 - eps) * build_lambda16(p).as_array() + eps * w
    if scenario is Scenario.THEOREM3 and endemic(p):
        # the theorem covers this branch only for u0 = 0
        return FACES["Lambda12"].sample(rng, 1)[0]
    return random_simplex_points(rng, 1)[0]


def _draw_start(
    scenario: Scenario,
    p: Params,
    rng: np.random.Generator,
    candidates: Sequence[FixedPointRecord],
    radius: float,
    max_redraws: int,
    local_radius: float,
) -> SimplexPoint:
    for _ in range(max_redraws):
        coords = _propose_start(scenario, p, rng, local_radius)
        if not _near_fixed_set(coords, candidates, radius):
            return SimplexPoint.from_sequence(coords)
    raise InvalidScenarioConfig(f"Every start drawn for {p} lies within {radius} of a fixed point")


def _evaluate_trial(job: _TrialJob) -> TrialRecord:
    rng = np.random.default_rng(job.seed)
    p = job.sampler.draw(rng)
    candidates = enumerate_fixed_points(p).candidates()
    start = _draw_start(
        job.sampler.scenario, p, rng, candidates, job.exclusion_radius, job.max_redraws, job.local_radius
    )
    expected = predicted_limit(job.sampler.scenario, p, start)

    trajectory = iterate_trajectory(p, start, max_iters=job.budgets.max_iters, tol_conv=job.budgets.tol_conv)
    verdict = detect_limit(trajectory, candidates, job.budgets.tol_match)

    if verdict.status is TrajectoryStatus.MAX_ITERS_REACHED:
        outcome = TrialOutcome.INCONCLUSIVE
    elif verdict.converged and verdict.matched_label == expected:
        outcome = TrialOutcome.CONFIRMED
    elif verdict.converged and trajectory.remaining_distance() >= job.budgets.tol_match:
        # Small steps but still drifting, typically beside a unit eigenvalue
        logger.debug(f"Trial {job.index} for {p} stopped short of its limit; counted inconclusive")
        outcome = TrialOutcome.INCONCLUSIVE
    else:
        outcome = TrialOutcome.REFUTED

    return TrialRecord(
        trial_index=job.index,
        trial_seed=job.seed,
        params=p,
        start=start,
        final=tuple(float(c) for c in trajectory.final_state),
        expected=expected,
        verdict=verdict,
        outcome=outcome,
    )


def _base_row(job: _CellJob) -> Dict[str, Any]:
    row: Dict[str, Any] = {"cell": job.index}
    row.update(job.values)
    return row


def _fixed_points_rows(job: _CellJob, p: Params) -> List[Dict[str, Any]]:
    fixed = enumerate_fixed_points(p)
    row = _base_row(job)
    row.update(labels=";".join(fixed.labels), case_tag=fixed.case_tag)
    if fixed.root is not None:
        row.update(root_outcome=fixed.root.outcome.value, A=fixed.root.A, residual=fixed.root.residual)
    return [row]


def _classify_rows(job: _CellJob, p: Params) -> List[Dict[str, Any]]:
    rows = []
    for record in enumerate_fixed_points(p).candidates():
        row = _base_row(job)
        row["label"] = record.label
        try:
            result = classify_fixed_point(p, record.point)
            row.update(classification=result.kind.value, spectral_radius=result.spectrum.spectral_radius)
        except SisiError as e:
            row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    return rows


def _limit_rows(job: _CellJob, p: Params) -> List[Dict[str, Any]]:
    points = job.initial_points
    rng = np.random.default_rng(trial_seed(points.seed, job.index))
    candidates = enumerate_fixed_points(p).candidates()
    rows = []
    for i, coords in enumerate(random_simplex_points(rng, points.count)):
        row = _base_row(job)
        row.update(start_index=i, x0=float(coords[0]), u0=float(coords[1]), y0=float(coords[2]), v0=float(coords[3]))
        try:
            start = SimplexPoint.from_sequence(coords)
            t = iterate_trajectory(p, start, max_iters=job.budgets.max_iters, tol_conv=job.budgets.tol_conv)
            verdict = detect_limit(t, candidates, job.budgets.tol_match)
            row.update(
                limit_label=verdict.matched_label,
                distance=verdict.distance,
                steps=verdict.steps_used,
                status=verdict.status.value,
            )
        except SisiError as e:
            row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    return rows


_TASK_HANDLERS: Dict[SweepTask, Callable[[_CellJob, Params], List[Dict[str, Any]]]] = {
    SweepTask.FIXED_POINTS: _fixed_points_rows,
    SweepTask.CLASSIFY: _classify_rows,
    SweepTask.LIMIT: _limit_rows,
}


def _evaluate_cell(job: _CellJob) -> List[Dict[str, Any]]:
    columns = SWEEP_COLUMNS[job.task]
    try:
        p = Params(**job.values)
        rows = _TASK_HANDLERS[job.task](job, p)
    except SisiError as e:
        row = _base_row(job)
        row["error"] = f"{type(e).__name__}: {e}"
        rows = [row]
    return [{column: row.get(column) for column in columns} for row in rows]


class Harness:
    """Runs evidence scenarios and parameter sweeps"""

    def __init__(self, config, workers: Optional[int] = None, progress: Optional[bool] = None):
        """Initialize with configuration"""
        self.config = config
        settings = config.HARNESS
        self.seed = settings.get("seed", 0)
        self.workers = workers if workers is not None else settings.get("workers", 1)
        self.progress = progress if progress is not None else settings.get("progress", True)
        self.exclusion_radius = settings.get("exclusion_radius", 1e-9)
        self.max_redraws = settings.get("max_redraws", 1000)
        self.local_radius = settings.get("local_radius", 1e-3)
        self.default_budgets = Budgets.from_config(config)

        if self.workers < 1:
            raise InvalidScenarioConfig(f"workers must be at least 1, got {self.workers}")

        logger.info(f"Harness initialized (workers={self.workers}, seed={self.seed})")

    def _resolve_seed(self, seed: Optional[int]) -> int:
        seed = self.seed if seed is None else seed
        if not 0 <= int(seed) <= MAX_SEED:
            raise InvalidScenarioConfig(f"seed must be a 64-bit unsigned integer, got {seed}")
        return int(seed)

    def _map(self, fn: Callable, jobs: Sequence, desc: str) -> List:
        """Ordered map over jobs, in a process pool when workers > 1"""
        show = self.progress and sys.stderr.isatty()
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                chunksize = max(1, len(jobs) // (4 * self.workers))
                results: Iterable = executor.map(fn, jobs, chunksize=chunksize)
                return list(tqdm(results, total=len(jobs), desc=desc, disable=not show))
        return [fn(job) for job in tqdm(jobs, desc=desc, disable=not show)]

    def sampler(self, scenario, **kwargs) -> ParamSampler:
        return ParamSampler(scenario=scenario, **kwargs)

    def gather_evidence(
        self,
        scenario,
        sampler: Optional[ParamSampler] = None,
        n_trials: int = 100,
        budgets: Optional[Budgets] = None,
        seed: Optional[int] = None,
    ) -> EvidenceReport:
        """
        Run n_trials independent (params, start) draws and tally whether each
        trajectory reaches the limit the scenario predicts.

        Trials that run out of iterations are inconclusive. In conjecture
        scenarios refutations are findings; in theorem-backed ones they are
        logged as errors.
        """
        scenario = Scenario(scenario)
        sampler = sampler or self.sampler(scenario)
        if sampler.scenario is not scenario:
            raise InvalidScenarioConfig(
                f"Sampler is for {sampler.scenario.value}, not {scenario.value}"
            )
        if n_trials < 0:
            raise InvalidScenarioConfig(f"n_trials must be nonnegative, got {n_trials}")
        budgets = budgets or self.default_budgets
        seed = self._resolve_seed(seed)

        logger.info(f"Gathering evidence for {scenario.value}/{sampler.branch.value}: {n_trials} trials, seed {seed}")
        jobs = [self._trial_job(sampler, trial_seed(seed, i), budgets, i) for i in range(n_trials)]
        records = self._map(_evaluate_trial, jobs, desc=scenario.value)

        refuted = tuple(r for r in records if r.outcome is TrialOutcome.REFUTED)
        confirmed = sum(1 for r in records if r.outcome is TrialOutcome.CONFIRMED)
        inconclusive = sum(1 for r in records if r.outcome is TrialOutcome.INCONCLUSIVE)

        for record in refuted:
            message = (
                f"Trial {record.trial_index} (seed {record.trial_seed}) expected {record.expected}, "
                f"got {record.verdict.matched_label} ({record.verdict.status.value})"
            )
            if scenario.theorem_backed:
                logger.error(message)
            else:
                logger.warning(message)

        logger.info(
            f"{scenario.value}: {confirmed} confirmed, {len(refuted)} refuted, {inconclusive} inconclusive"
        )
        return EvidenceReport(
            scenario=scenario,
            branch=sampler.branch,
            seed=seed,
            trials=n_trials,
            confirmed=confirmed,
            refuted=refuted,
            inconclusive=inconclusive,
            budgets=budgets,
        )

    def _trial_job(self, sampler: ParamSampler, seed: int, budgets: Budgets, index: int) -> _TrialJob:
        return _TrialJob(
            index=index,
            seed=seed,
            sampler=sampler,
            budgets=budgets,
            exclusion_radius=self.exclusion_radius,
            max_redraws=self.max_redraws,
            local_radius=self.local_radius,
        )

    def replay_trial(
        self,
        sampler: ParamSampler,
        seed: int,
        budgets: Optional[Budgets] = None,
        trial_index: int = 0,
    ) -> TrialRecord:
        """Re-run a single trial from its recorded 64-bit trial seed"""
        job = self._trial_job(sampler, int(seed), budgets or self.default_budgets, trial_index)
        return _evaluate_trial(job)

    def run_sweep(self, grid: SweepGrid, task, budgets: Optional[Budgets] = None) -> List[Dict[str, Any]]:
        """
        Evaluate the task at every grid cell. Per-cell domain errors land in
        the error column instead of stopping the sweep.
        """
        task = SweepTask(task)
        if task is SweepTask.LIMIT and (grid.initial_points is None or grid.initial_points.count == 0):
            raise InvalidScenarioConfig("The limit task needs a nonempty initial_points section")
        budgets = budgets or self.default_budgets
        cells = grid.cells()
        logger.info(f"Sweeping {len(cells)} cell(s) with task {task.value}")

        jobs = [
            _CellJob(index=i, values=values, task=task, budgets=budgets, initial_points=grid.initial_points)
            for i, values in enumerate(cells)
        ]
        results = self._map(_evaluate_cell, jobs, desc=f"sweep {task.value}")

        rows = [row for cell_rows in results for row in cell_rows]
        failed = sum(1 for row in rows if row["error"])
        if failed:
            logger.warning(f"{failed} sweep row(s) recorded an error")
        rows.sort(key=lambda row: (row["cell"], row.get("start_index") or 0))
        return rows


if __name__ == "__main__":
    # For standalone testing
    logging.basicConfig(level=logging.INFO)

    import config

    harness = Harness(config, progress=False)
    fig1 = {"b": 0.2, "alpha": 0.3, "beta1": 0.7, "beta2": 0.6, "k1": 1.0, "k2": 0.3}
    report = harness.gather_evidence(
        Scenario.CONJECTURE2,
        harness.sampler(Scenario.CONJECTURE2, fixed=fig1),
        n_trials=5,
        budgets=Budgets(max_iters=100_000, tol_conv=1e-12, tol_match=1e-6),
    )
    print(report.to_dict())
    grid = SweepGrid(ranges={"k1": (0.5, 1.0, 2)}, fixed={k: v for k, v in fig1.items() if k != "k1"})
    for row in harness.run_sweep(grid, SweepTask.FIXED_POINTS):
        print(row)
