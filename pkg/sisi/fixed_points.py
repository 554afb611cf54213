#!/usr/bin/env python3
"""
Fixed Points

Named fixed points of V, the interior fixed point equation for the force of
infection A,

    1 = b*beta1*k1 / ((b + beta1*A)(b + alpha))
        + alpha*beta1*beta2*k2*A / ((b + beta1*A)(b + beta2*A)(b + alpha)),

and the enumeration of Fix(V) by which parameters vanish.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from config import ROOTS
from sisi.dynamics import (
    COORD_NAMES,
    LAMBDA1,
    LAMBDA4,
    PARAM_NAMES,
    Params,
    SimplexPoint,
    fixedness_residual,
    is_identity_operator,
)
from sisi.errors import DegenerateParameters, InconsistentRoot, NotInSimplex, PreconditionViolated

logger = logging.getLogger(__name__)

FIXEDNESS_TOL = 1e-10


class RootOutcome(str, Enum):
    UNIQUE_POSITIVE = "unique_positive"
    NO_POSITIVE_ROOT = "no_positive_root"


class RootMethod(str, Enum):
    QUADRATIC = "quadratic"
    CLOSED_FORM_CASE_I = "closed_form_case_i"
    BISECTION_FALLBACK = "bisection_fallback"


class ForceCase(str, Enum):
    """Which branch of the existence trichotomy applied"""
    CASE_I = "i"        # beta1*k1 == b+alpha
    CASE_II = "ii"      # beta1*k1 > b+alpha
    CASE_III = "iii"    # beta1*k1 < b+alpha
    NO_BIRTH = "no_birth"  # b == 0, the root maps to the vertex lambda4


@dataclass(frozen=True)
class RootResult:
    outcome: RootOutcome
    case: ForceCase
    A: Optional[float] = None
    method: Optional[RootMethod] = None
    residual: Optional[float] = None
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.outcome is RootOutcome.UNIQUE_POSITIVE


def force_equation_gap(p: Params, A):
    """f(A) - g(A) with f(A) = b + beta1*A; works on floats and numpy arrays"""
    f = p.b + p.beta1 * A
    g = p.b * p.beta1 * p.k1 / (p.b + p.alpha) + p.alpha * p.beta1 * p.beta2 * p.k2 * A / (
        (p.b + p.beta2 * A) * (p.b + p.alpha)
    )
    return f - g


def force_equation_residual(p: Params, A: float) -> float:
    return abs(force_equation_gap(p, A))


def force_quadratic_coefficients(p: Params) -> Tuple[float, float, float]:
    """Coefficients of the force equation after clearing denominators"""
    s = p.b + p.alpha
    a = s * p.beta1 * p.beta2
    b = s * p.b * (p.beta1 + p.beta2) - p.b * p.beta1 * p.beta2 * p.k1 - p.alpha * p.beta1 * p.beta2 * p.k2
    c = p.b * p.b * (s - p.beta1 * p.k1)
    return a, b, c


def _positive_quadratic_root(a: float, b: float, c: float) -> Optional[float]:
    if a == 0.0:
        if b == 0.0:
            return None
        root = -c / b
        return root if root > 0 else None
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return None
    # no cancellation between b and the square root
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return None
    positive = [root for root in (q / a, c / q) if root > 0]
    return max(positive) if positive else None


def _bracketed_root(p: Params) -> Optional[float]:
    """Root of f - g on (bracket_low, k1 + k2]; A = k1*u + k2*v cannot exceed k1 + k2 on S^3"""
    lo, hi = ROOTS["bracket_low"], p.k1 + p.k2
    if hi <= lo:
        return None
    g_lo, g_hi = force_equation_gap(p, lo), force_equation_gap(p, hi)
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0:
        return None
    return brentq(lambda A: force_equation_gap(p, A), lo, hi, xtol=1e-15, maxiter=500)


def solve_force_equation(
    p: Params,
    equality_tol: float = ROOTS["equality_tol"],
    residual_tol: float = ROOTS["residual_tol"],
) -> RootResult:
    """
    Find the positive root of the interior fixed point equation.

    Case (iii) beta1*k1 < b+alpha has no positive root. Case (i)
    beta1*k1 = b+alpha (within equality_tol) uses the closed form
    A = (alpha*beta2*k2 - b*beta1*k1)/(beta1*beta2*k1) when it is positive.
    Case (ii) beta1*k1 > b+alpha solves the cleared quadratic, whose constant
    term is negative so exactly one root is positive.

    Raises:
        DegenerateParameters: b + alpha == 0, the equation is undefined.
    """
    if p.b + p.alpha == 0.0:
        raise DegenerateParameters("b + alpha = 0: the force equation has a zero denominator")
    if p.b == 0.0:
        return RootResult(
            RootOutcome.NO_POSITIVE_ROOT,
            ForceCase.NO_BIRTH,
            reason="b = 0: the root A = k2 gives the vertex lambda4, not an interior point",
        )

    margin = p.beta1 * p.k1 - (p.b + p.alpha)

    if abs(margin) <= equality_tol:
        numerator = p.alpha * p.beta2 * p.k2 - p.b * p.beta1 * p.k1
        if numerator > 0:
            A = numerator / (p.beta1 * p.beta2 * p.k1)
            return RootResult(
                RootOutcome.UNIQUE_POSITIVE,
                ForceCase.CASE_I,
                A=A,
                method=RootMethod.CLOSED_FORM_CASE_I,
                residual=force_equation_residual(p, A),
            )
        return RootResult(
            RootOutcome.NO_POSITIVE_ROOT,
            ForceCase.CASE_I,
            reason="beta1*k1 = b+alpha and alpha*beta2*k2 <= b*beta1*k1",
        )

    if margin < 0:
        return RootResult(
            RootOutcome.NO_POSITIVE_ROOT,
            ForceCase.CASE_III,
            reason="beta1*k1 < b+alpha",
        )

    method = RootMethod.QUADRATIC
    A = _positive_quadratic_root(*force_quadratic_coefficients(p))
    if A is None or force_equation_residual(p, A) > residual_tol:
        logger.debug(f"Quadratic root {A} for {p} rejected, falling back to bracketing")
        method = RootMethod.BISECTION_FALLBACK
        A = _bracketed_root(p)
        if A is None:
            return RootResult(
                RootOutcome.NO_POSITIVE_ROOT,
                ForceCase.CASE_II,
                reason="no sign change of f - g on the admissible bracket",
            )

    residual = force_equation_residual(p, A)
    if residual > residual_tol:
        logger.warning(f"Force equation root A={A!r} for {p} has residual {residual:.3g}, rejected")
        return RootResult(
            RootOutcome.NO_POSITIVE_ROOT,
            ForceCase.CASE_II,
            reason=f"best root A={A!r} has residual {residual:.3g} above {residual_tol:g}",
        )
    return RootResult(RootOutcome.UNIQUE_POSITIVE, ForceCase.CASE_II, A=A, method=method, residual=residual)


def build_lambda15(p: Params) -> SimplexPoint:
    """(b/(beta1*k1), (beta1*k1 - b)/(beta1*k1), 0, 0)"""
    c = p.beta1 * p.k1
    if c <= p.b:
        raise NotInSimplex(f"lambda15 needs beta1*k1 > b, got beta1*k1={c!r}, b={p.b!r}")
    return SimplexPoint(p.b / c, (c - p.b) / c, 0.0, 0.0)


def build_lambda16(p: Params) -> SimplexPoint:
    """Endemic point on the v = 0 face, fixed when beta2 = 0"""
    s = p.b + p.alpha
    if s <= 0:
        raise PreconditionViolated("lambda16 needs b + alpha > 0")
    c = p.beta1 * p.k1
    if c <= s:
        raise NotInSimplex(f"lambda16 needs beta1*k1 > b+alpha, got beta1*k1={c!r}, b+alpha={s!r}")
    m = c - s
    return SimplexPoint(s / c, p.b * m / (c * s), p.alpha * m / (c * s), 0.0)


def build_lambda17(p: Params, A: float, tol: float = ROOTS["consistency_tol"]) -> SimplexPoint:
    """
    Interior fixed point for a root A of the force equation.

    The coordinates sum to 1 for any A, so the root is checked through
    k1*u + k2*v == A instead.

    Raises:
        PreconditionViolated: b == 0.
        InconsistentRoot: A is negative or not a root.
    """
    if p.b <= 0:
        raise PreconditionViolated("lambda17 needs b > 0")
    if not A >= 0:
        raise InconsistentRoot(f"Force of infection must be nonnegative, got {A!r}")
    d1 = p.b + p.beta1 * A
    d2 = p.b + p.beta2 * A
    s = p.b + p.alpha
    coords = (
        p.b / d1,
        p.b * p.beta1 * A / (d1 * s),
        p.alpha * p.b * p.beta1 * A / (d1 * d2 * s),
        p.alpha * p.beta1 * p.beta2 * A * A / (d1 * d2 * s),
    )
    total_error = abs(math.fsum(coords) - 1.0)
    force_error = abs(p.k1 * coords[1] + p.k2 * coords[3] - A)
    if total_error > tol or force_error > tol * max(1.0, A):
        raise InconsistentRoot(
            f"A={A!r} is not a root: coordinate sum off by {total_error:.3g}, "
            f"k1*u + k2*v off by {force_error:.3g}"
        )
    return SimplexPoint(*coords)


@dataclass(frozen=True)
class Face:
    """A face of S^3 given by the coordinates pinned to zero"""
    name: str
    pinned: Tuple[int, ...]

    @property
    def free(self) -> Tuple[int, ...]:
        return tuple(i for i in range(4) if i not in self.pinned)

    def describe(self) -> str:
        if not self.pinned:
            return "whole simplex"
        return "=".join(COORD_NAMES[i] for i in self.pinned) + "=0"

    def representative(self) -> SimplexPoint:
        coords = [0.0] * 4
        for i in self.free:
            coords[i] = 1.0 / len(self.free)
        return SimplexPoint(*coords)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform barycentric points on the face, shape (count, 4)"""
        points = np.zeros((count, 4))
        points[:, list(self.free)] = rng.dirichlet(np.ones(len(self.free)), size=count)
        return points

    def distance(self, coords: Sequence[float]) -> float:
        return max((abs(coords[i]) for i in self.pinned), default=0.0)

    def contains(self, coords: Sequence[float], tol: float) -> bool:
        if self.distance(coords) >= tol:
            return False
        free = [coords[i] for i in self.free]
        return min(free) > -tol and abs(math.fsum(free) - 1.0) < tol

    def includes(self, other: "Face") -> bool:
        return set(self.pinned) <= set(other.pinned)


FACES: Dict[str, Face] = {
    face.name: face
    for face in (
        Face("Lambda5", (0, 1)),
        Face("Lambda6", (0, 2)),
        Face("Lambda7", (0, 3)),
        Face("Lambda8", (1, 2)),
        Face("Lambda9", (1, 3)),
        Face("Lambda10", (2, 3)),
        Face("Lambda11", (0,)),
        Face("Lambda12", (1,)),
        Face("Lambda13", (2,)),
        Face("Lambda14", (3,)),
        Face("S3", ()),
    )
}


@dataclass(frozen=True)
class FixedPointRecord:
    """A fixed point or, when face is set, a face of fixed points represented by its barycenter"""
    point: SimplexPoint
    label: str
    fixedness_residual: float
    face: Optional[Face] = None

    @property
    def is_face(self) -> bool:
        return self.face is not None


@dataclass(frozen=True)
class FixedPointSet:
    isolated: Tuple[FixedPointRecord, ...]
    faces: Tuple[FixedPointRecord, ...]
    case_tag: str
    root: Optional[RootResult] = None

    @property
    def labels(self) -> List[str]:
        return [record.label for record in self.isolated + self.faces]

    def get(self, label: str) -> Optional[FixedPointRecord]:
        for record in self.isolated + self.faces:
            if record.label == label:
                return record
        return None

    def candidates(self) -> List[FixedPointRecord]:
        return list(self.isolated + self.faces)


@dataclass(frozen=True)
class _NoBirthRow:
    zeros: FrozenSet[str]
    points: Tuple[str, ...]
    faces: Tuple[str, ...]

    @property
    def tag(self) -> str:
        order = [name for name in PARAM_NAMES if name in self.zeros]
        return "=".join(order) + "=0"


def _row(zeros: str, points: Tuple[str, ...], faces: Tuple[str, ...]) -> _NoBirthRow:
    return _NoBirthRow(frozenset(zeros.split()), points, faces)


# Rows of the fixed point table with b = 0
NO_BIRTH_ROWS = (
    _row("b", ("lambda4",), ("Lambda9",)),
    _row("b alpha", (), ("Lambda6", "Lambda9")),
    _row("b beta1", (), ("Lambda8", "Lambda9")),
    _row("b beta2", (), ("Lambda5", "Lambda9")),
    _row("b k1", ("lambda4",), ("Lambda9",)),
    _row("b k2", (), ("Lambda12",)),
    _row("b alpha beta1", (), ("Lambda9", "Lambda13")),
    _row("b alpha beta2", (), ("Lambda9", "Lambda11")),
    _row("b alpha k1", (), ("Lambda6", "Lambda14")),
    _row("b alpha k2", (), ("Lambda6", "Lambda12")),
    _row("b beta1 beta2", (), ("Lambda12",)),
    _row("b beta1 k1", (), ("Lambda8", "Lambda9")),
    _row("b beta1 k2", (), ("Lambda12",)),
    _row("b beta2 k1", (), ("Lambda5", "Lambda9")),
    _row("b beta2 k2", (), ("Lambda12",)),
)

_VERTICES = {"lambda1": LAMBDA1, "lambda4": LAMBDA4}


def _record(p: Params, label: str, point: SimplexPoint, face: Optional[Face] = None) -> FixedPointRecord:
    residual = fixedness_residual(p, point)
    if residual > FIXEDNESS_TOL:
        logger.warning(f"{label} for {p} has fixedness residual {residual:.3g}")
    return FixedPointRecord(point=point, label=label, fixedness_residual=residual, face=face)


def _face_records(p: Params, names: Sequence[str]) -> Tuple[FixedPointRecord, ...]:
    return tuple(_record(p, name, FACES[name].representative(), FACES[name]) for name in names)


def _no_birth_fixed_points(p: Params) -> Tuple[List[str], List[str], str]:
    """
    With b = 0 every equation of V is a product, so vanishing parameters only
    enlarge the fixed set: union all matched rows, then keep maximal faces.
    """
    zeros = {name for name in PARAM_NAMES if getattr(p, name) == 0.0}
    matched = [row for row in NO_BIRTH_ROWS if row.zeros <= zeros]
    most_specific = max(len(row.zeros) for row in matched)
    case_tag = " | ".join(row.tag for row in matched if len(row.zeros) == most_specific)

    face_names = sorted({name for row in matched for name in row.faces}, key=lambda n: list(FACES).index(n))
    kept_faces = [
        name
        for name in face_names
        if not any(other != name and FACES[other].includes(FACES[name]) for other in face_names)
    ]
    point_names = sorted({name for row in matched for name in row.points})
    kept_points = [
        name
        for name in point_names
        if not any(FACES[face].contains(_VERTICES[name].as_tuple(), 1e-12) for face in kept_faces)
    ]
    return kept_points, kept_faces, case_tag


def enumerate_fixed_points(p: Params) -> FixedPointSet:
    """
    Fix(V) for the given parameters.

    lambda1 is always reported as an isolated point; it is fixed for every
    parameter set.
    """
    isolated = [_record(p, "lambda1", LAMBDA1)]

    if is_identity_operator(p):
        return FixedPointSet(tuple(isolated), _face_records(p, ["S3"]), "identity")

    if p.b == 0.0:
        point_names, face_names, case_tag = _no_birth_fixed_points(p)
        isolated += [_record(p, name, _VERTICES[name]) for name in point_names if name != "lambda1"]
        return FixedPointSet(tuple(isolated), _face_records(p, face_names), case_tag)

    c = p.beta1 * p.k1
    if p.alpha == 0.0 and c > p.b:
        isolated.append(_record(p, "lambda15", build_lambda15(p)))
        return FixedPointSet(tuple(isolated), (), "b>0, alpha=0, beta1*k1>b")

    if p.alpha > 0.0 and p.beta2 == 0.0 and c > p.b + p.alpha:
        isolated.append(_record(p, "lambda16", build_lambda16(p)))
        return FixedPointSet(tuple(isolated), (), "b>0, alpha>0, beta2=0, beta1*k1>b+alpha")

    if p.alpha * p.b * p.beta1 * p.beta2 * p.k1 > 0.0:
        root = solve_force_equation(p)
        if root.found:
            isolated.append(_record(p, "lambda17", build_lambda17(p, root.A)))
        return FixedPointSet(tuple(isolated), (), "alpha*b*beta1*beta2*k1>0", root)

    return FixedPointSet(tuple(isolated), (), "lambda1")


if __name__ == "__main__":
    # For standalone testing
    logging.basicConfig(level=logging.DEBUG)

    params = Params(b=0.2, alpha=0.3, beta1=0.7, beta2=0.6, k1=1.0, k2=0.3)
    result = solve_force_equation(params)
    print(f"A = {result.A} via {result.method}, residual {result.residual}")
    fixed = enumerate_fixed_points(params)
    for record in fixed.isolated:
        print(f"  - {record.label}: {record.point.as_tuple()} (residual {record.fixedness_residual:.2e})")
