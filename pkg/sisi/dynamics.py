#!/usr/bin/env python3
"""
Core Dynamics

Parameter and state types for the discrete-time SISI model, the QSO
conditions on the parameters, and the evolution operator V on the simplex S^3:

    x' = x + b - b*x - beta1*A*x
    u' = u - b*u - alpha*u + beta1*A*x
    y' = y - b*y + alpha*u - beta2*A*y
    v' = v - b*v + beta2*A*y

with force of infection A = k1*u + k2*v.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import DYNAMICS
from sisi.errors import InvalidParameters, LeftSimplex, NotInSimplex

logger = logging.getLogger(__name__)

PARAM_NAMES = ("b", "alpha", "beta1", "beta2", "k1", "k2")
COORD_NAMES = ("x", "u", "y", "v")

TOL_SIMPLEX = DYNAMICS["tol_simplex"]
TOL_CONV = DYNAMICS["tol_conv"]

# absorbs rounding in products such as beta1*k1 when a parameter sits on a bound
CONDITION_SLACK = 1e-12

Coords = Tuple[float, float, float, float]


def _parse_floats(text: str, expected: int, what: str) -> List[float]:
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != expected or any(not part for part in parts):
        raise ValueError(f"{what} needs {expected} comma separated numbers, got {text!r}")
    return [float(part) for part in parts]


@dataclass(frozen=True)
class Params:
    """The six model parameters; all nonnegative, (cond) is checked separately"""
    b: float
    alpha: float
    beta1: float
    beta2: float
    k1: float
    k2: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            raw = getattr(self, name)
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise InvalidParameters(f"{name} must be a number, got {raw!r}")
            if not math.isfinite(value) or value < 0:
                raise InvalidParameters(f"{name} must be finite and nonnegative, got {raw!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "Params":
        if len(values) != len(PARAM_NAMES):
            raise InvalidParameters(f"Expected {len(PARAM_NAMES)} parameters, got {len(values)}")
        return cls(*values)

    @classmethod
    def from_string(cls, text: str) -> "Params":
        """Parse 'b,alpha,beta1,beta2,k1,k2'"""
        try:
            values = _parse_floats(text, len(PARAM_NAMES), "params")
        except ValueError as e:
            raise InvalidParameters(str(e))
        return cls.from_sequence(values)

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in PARAM_NAMES)

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **changes: float) -> "Params":
        return dataclasses.replace(self, **changes)


def simplex_violation(coords: Sequence[float]) -> float:
    """Largest amount by which coords miss S^3 (negative entry or sum != 1)"""
    return max(0.0, -min(coords), abs(math.fsum(coords) - 1.0))


@dataclass(frozen=True)
class SimplexPoint:
    """A state (x, u, y, v) on S^3"""
    x: float
    u: float
    y: float
    v: float

    def __post_init__(self):
        coords = []
        for name in COORD_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise NotInSimplex(f"{name} is not finite: {value!r}")
            object.__setattr__(self, name, value)
            coords.append(value)
        violation = simplex_violation(coords)
        if violation > TOL_SIMPLEX:
            raise NotInSimplex(f"({', '.join(f'{c:.6g}' for c in coords)}) misses S^3 by {violation:.3g}")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "SimplexPoint":
        if len(values) != 4:
            raise NotInSimplex(f"Expected 4 coordinates, got {len(values)}")
        return cls(*(float(value) for value in values))

    @classmethod
    def from_string(cls, text: str) -> "SimplexPoint":
        """Parse 'x,u,y,v'"""
        try:
            values = _parse_floats(text, 4, "start")
        except ValueError as e:
            raise NotInSimplex(str(e))
        return cls.from_sequence(values)

    def as_tuple(self) -> Coords:
        return (self.x, self.u, self.y, self.v)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def distance(self, other: "SimplexPoint") -> float:
        """Sup-norm distance"""
        return max(abs(a - b) for a, b in zip(self.as_tuple(), other.as_tuple()))


LAMBDA1 = SimplexPoint(1.0, 0.0, 0.0, 0.0)
LAMBDA2 = SimplexPoint(0.0, 1.0, 0.0, 0.0)
LAMBDA3 = SimplexPoint(0.0, 0.0, 1.0, 0.0)
LAMBDA4 = SimplexPoint(0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class ConditionViolation:
    condition: str
    value: float
    bound: float


@dataclass(frozen=True)
class ValidationReport:
    is_qso: bool
    violations: Tuple[ConditionViolation, ...]
    is_identity: bool


# The nine inequalities (cond) under which V maps S^3 into itself
QSO_CONDITIONS = (
    ("alpha + b <= 1", lambda p: p.alpha + p.b, 1.0),
    ("beta1*k2 <= 2", lambda p: p.beta1 * p.k2, 2.0),
    ("beta2*k1 <= 2", lambda p: p.beta2 * p.k1, 2.0),
    ("b + beta2*k2 <= 1", lambda p: p.b + p.beta2 * p.k2, 1.0),
    ("|b - beta1*k1| <= 1", lambda p: abs(p.b - p.beta1 * p.k1), 1.0),
    ("|b - beta2*k2| <= 1", lambda p: abs(p.b - p.beta2 * p.k2), 1.0),
    ("|b - beta1*k2| <= 1", lambda p: abs(p.b - p.beta1 * p.k2), 1.0),
    ("|alpha + b - beta1*k1| <= 1", lambda p: abs(p.alpha + p.b - p.beta1 * p.k1), 1.0),
    ("|alpha - b - beta2*k1| <= 1", lambda p: abs(p.alpha - p.b - p.beta2 * p.k1), 1.0),
)


def is_identity_operator(p: Params) -> bool:
    """b=alpha=k1=k2=0 or b=alpha=beta1=beta2=0 make V the identity"""
    if p.b != 0.0 or p.alpha != 0.0:
        return False
    return (p.k1 == 0.0 and p.k2 == 0.0) or (p.beta1 == 0.0 and p.beta2 == 0.0)


def validate_params(p: Params) -> ValidationReport:
    """Evaluate every QSO condition and report the violated ones with their values"""
    violations = []
    for condition, lhs, bound in QSO_CONDITIONS:
        value = lhs(p)
        if value > bound + CONDITION_SLACK:
            violations.append(ConditionViolation(condition, value, bound))
    if violations:
        logger.debug(f"{p} violates {len(violations)} QSO condition(s)")
    return ValidationReport(
        is_qso=not violations,
        violations=tuple(violations),
        is_identity=is_identity_operator(p),
    )


def force_of_infection(p: Params, s: SimplexPoint) -> float:
    return p.k1 * s.u + p.k2 * s.v


def _image(p: Params, x: float, u: float, y: float, v: float) -> Coords:
    a = p.k1 * u + p.k2 * v
    return (
        x + p.b - p.b * x - p.beta1 * a * x,
        u - p.b * u - p.alpha * u + p.beta1 * a * x,
        y - p.b * y + p.alpha * u - p.beta2 * a * y,
        v - p.b * v + p.beta2 * a * y,
    )


def operator_step(p: Params, states: np.ndarray) -> np.ndarray:
    """
    Evaluate V on an array of shape (..., 4) without any membership check.

    Uses the same expression order as apply, so images agree bit for bit.
    """
    states = np.asarray(states, dtype=float)
    x, u, y, v = states[..., 0], states[..., 1], states[..., 2], states[..., 3]
    a = p.k1 * u + p.k2 * v
    return np.stack(
        [
            x + p.b - p.b * x - p.beta1 * a * x,
            u - p.b * u - p.alpha * u + p.beta1 * a * x,
            y - p.b * y + p.alpha * u - p.beta2 * a * y,
            v - p.b * v + p.beta2 * a * y,
        ],
        axis=-1,
    )


def apply(p: Params, s: SimplexPoint, tol: float = TOL_SIMPLEX) -> SimplexPoint:
    """
    One step of V.

    Raises:
        LeftSimplex: a coordinate of the image is outside [-tol, 1+tol]. The
            image is attached to the exception so callers may carry on.
    """
    image = _image(p, *s.as_tuple())
    if min(image) < -tol or max(image) > 1.0 + tol:
        raise LeftSimplex(f"V{s.as_tuple()} = {image} left the simplex", image)
    try:
        return SimplexPoint(*image)
    except NotInSimplex as e:
        raise LeftSimplex(str(e), image)


def fixedness_residual(p: Params, s: SimplexPoint) -> float:
    """Sup norm of V(s) - s"""
    image = _image(p, *s.as_tuple())
    return max(abs(a - b) for a, b in zip(image, s.as_tuple()))


def random_simplex_points(rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform barycentric sample of shape (count, 4)"""
    return rng.dirichlet(np.ones(4), size=count)


class TrajectoryStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS_REACHED = "max_iters_reached"
    LEFT_SIMPLEX = "left_simplex"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Iterates of V from an initial point.

    iterates holds the stored states as rows and steps their iteration
    numbers. Long runs are thinned, but the initial state and the last two
    states are always kept, so iterates[-1] == V(iterates[-2]) holds for
    every status.
    """
    params: Params
    iterates: np.ndarray
    steps: np.ndarray
    status: TrajectoryStatus
    at_step: int
    tol_conv: float

    @property
    def converged(self) -> bool:
        return self.status is TrajectoryStatus.CONVERGED

    @property
    def final_state(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def limit(self) -> Optional[SimplexPoint]:
        if not self.converged:
            return None
        return SimplexPoint.from_sequence(self.final_state)

    @property
    def steps_used(self) -> int:
        return int(self.steps[-1])

    def last_step_difference(self) -> float:
        return float(np.max(np.abs(self.iterates[-1] - self.iterates[-2])))

    def remaining_distance(self) -> float:
        """
        Estimated sup-norm distance from the final state to the limit.

        Takes one more step and treats the step sizes as geometric with ratio
        r = next/last, bounding the tail by last/(1 - r). Slow creep near a unit
        eigenvalue gives r close to 1 and a large estimate even when the last
        step is below tol_conv. inf when the steps do not shrink.
        """
        final = tuple(float(c) for c in self.final_state)
        last = self.last_step_difference()
        following = max(abs(a - b) for a, b in zip(_image(self.params, *final), final))
        if last == 0.0:
            return 0.0 if following == 0.0 else math.inf
        ratio = following / last
        if ratio >= 1.0:
            return math.inf
        return last / (1.0 - ratio)


def iterate_trajectory(
    p: Params,
    s0: SimplexPoint,
    max_iters: int = DYNAMICS["max_iters"],
    tol_conv: float = TOL_CONV,
    tol_simplex: float = TOL_SIMPLEX,
    max_stored: int = DYNAMICS["max_stored_iterates"],
) -> Trajectory:
    """
    Iterate V from s0 until the sup-norm step difference drops below tol_conv,
    an image leaves the simplex, or max_iters steps are done.

    States are not renormalized between steps.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    if not tol_conv > 0:
        raise ValueError(f"tol_conv must be positive, got {tol_conv}")

    stride = 1 if max_iters <= max_stored else math.ceil(max_iters / max_stored)
    lo, hi = -tol_simplex, 1.0 + tol_simplex

    current = s0.as_tuple()
    previous = current
    stored = [current]
    stored_steps = [0]
    status = TrajectoryStatus.MAX_ITERS_REACHED
    step = 0

    for step in range(1, max_iters + 1):
        previous, current = current, _image(p, *current)
        if min(current) < lo or max(current) > hi:
            status = TrajectoryStatus.LEFT_SIMPLEX
            break
        diff = max(
            abs(current[0] - previous[0]),
            abs(current[1] - previous[1]),
            abs(current[2] - previous[2]),
            abs(current[3] - previous[3]),
        )
        if diff < tol_conv:
            status = TrajectoryStatus.CONVERGED
            break
        if step % stride == 0:
            stored.append(current)
            stored_steps.append(step)

    if stored_steps[-1] == step:
        stored.pop()
        stored_steps.pop()
    for kept_step, state in ((step - 1, previous), (step, current)):
        if stored_steps[-1] < kept_step:
            stored.append(state)
            stored_steps.append(kept_step)

    logger.debug(f"Trajectory from {s0.as_tuple()} ended as {status.value} at step {step}")

    iterates = np.array(stored)
    steps = np.array(stored_steps, dtype=np.int64)
    iterates.flags.writeable = False
    steps.flags.writeable = False
    return Trajectory(
        params=p,
        iterates=iterates,
        steps=steps,
        status=status,
        at_step=step,
        tol_conv=tol_conv,
    )


if __name__ == "__main__":
    # For standalone testing
    logging.basicConfig(level=logging.DEBUG)

    params = Params(b=0.2, alpha=0.3, beta1=0.7, beta2=0.6, k1=1.0, k2=0.3)
    print(validate_params(params))
    print(apply(params, SimplexPoint(0.25, 0.25, 0.25, 0.25)))
    trajectory = iterate_trajectory(params, SimplexPoint(0.25, 0.25, 0.25, 0.25))
    print(f"{trajectory.status.value} after {trajectory.at_step} steps: {trajectory.limit}")
