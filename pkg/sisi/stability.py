#!/usr/bin/env python3
"""
Stability

Jacobian of V, eigenvalues of 4x4 matrices, the hyperbolic fixed point
classification (attracting / repelling / saddle), the closed-form spectrum at
lambda16 when beta2 = 0, and the reduced (u, z) operator used when k2 = 0.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from config import DYNAMICS, STABILITY
from sisi.dynamics import Params, SimplexPoint, fixedness_residual, operator_step
from sisi.errors import ConvergenceFailure, NotAFixedPoint, NotInSimplex, PreconditionViolated

logger = logging.getLogger(__name__)

Matrix4 = np.ndarray

# moduli closer than this sort as ties
_SORT_DECIMALS = 12


def _canonical_key(z: complex) -> Tuple[float, float, float]:
    return (-round(abs(z), _SORT_DECIMALS), -round(z.real, _SORT_DECIMALS), -round(z.imag, _SORT_DECIMALS))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by descending modulus, then real part, then imaginary part"""
    eigenvalues: Tuple[complex, ...]
    moduli: Tuple[float, ...]

    @classmethod
    def from_values(cls, values: Sequence[complex]) -> "Spectrum":
        ordered = sorted((complex(value) for value in values), key=_canonical_key)
        return cls(eigenvalues=tuple(ordered), moduli=tuple(abs(z) for z in ordered))

    @property
    def spectral_radius(self) -> float:
        return self.moduli[0]

    def max_deviation(self, other: "Spectrum") -> float:
        """Largest distance between paired eigenvalues, pairing each with its nearest unused partner"""
        remaining = list(other.eigenvalues)
        worst = 0.0
        for z in self.eigenvalues:
            nearest = min(remaining, key=lambda w: abs(w - z))
            remaining.remove(nearest)
            worst = max(worst, abs(nearest - z))
        return worst


class StabilityKind(str, Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    SADDLE = "saddle"
    NON_HYPERBOLIC = "non_hyperbolic"


@dataclass(frozen=True)
class Classification:
    kind: StabilityKind
    spectrum: Spectrum
    unit_circle_tol: float


def jacobian(p: Params, s: SimplexPoint) -> Matrix4:
    """Partial derivatives of V at s; rows and columns in the order x, u, y, v"""
    x, u, y, v = s.as_tuple()
    a = p.k1 * u + p.k2 * v
    return np.array(
        [
            [1 - p.b - p.beta1 * a, -p.beta1 * p.k1 * x, 0.0, -p.beta1 * p.k2 * x],
            [p.beta1 * a, 1 - p.b - p.alpha + p.beta1 * p.k1 * x, 0.0, p.beta1 * p.k2 * x],
            [0.0, p.alpha - p.beta2 * p.k1 * y, 1 - p.b - p.beta2 * a, -p.beta2 * p.k2 * y],
            [0.0, p.beta2 * p.k1 * y, p.beta2 * a, 1 - p.b + p.beta2 * p.k2 * y],
        ]
    )


def numerical_jacobian(p: Params, coords: Sequence[float], step: float = STABILITY["fd_step"]) -> Matrix4:
    """Central differences of V; coords need not lie on the simplex"""
    base = np.asarray(coords, dtype=float)
    offsets = np.eye(4) * step
    forward = operator_step(p, base + offsets)
    backward = operator_step(p, base - offsets)
    # row j of forward/backward is the image of the j-th perturbation
    return ((forward - backward) / (2 * step)).T


def eigenvalues4(m: Matrix4) -> Spectrum:
    """
    All four eigenvalues of m with multiplicity (LAPACK Hessenberg QR).

    Raises:
        ConvergenceFailure: the QR iteration did not converge.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"Expected a 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix has non-finite entries")
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"Eigenvalue iteration did not converge: {e}") from e
    return Spectrum.from_values(values)


def classify_spectrum(spectrum: Spectrum, unit_circle_tol: float = STABILITY["unit_circle_tol"]) -> StabilityKind:
    moduli = spectrum.moduli
    if any(abs(m - 1.0) <= unit_circle_tol for m in moduli):
        return StabilityKind.NON_HYPERBOLIC
    if all(m < 1.0 - unit_circle_tol for m in moduli):
        return StabilityKind.ATTRACTING
    if all(m > 1.0 + unit_circle_tol for m in moduli):
        return StabilityKind.REPELLING
    return StabilityKind.SADDLE


def classify_fixed_point(
    p: Params,
    s: SimplexPoint,
    unit_circle_tol: float = STABILITY["unit_circle_tol"],
    fixedness_tol: float = STABILITY["fixedness_tol"],
) -> Classification:
    """
    Hyperbolicity type of the fixed point s.

    Raises:
        NotAFixedPoint: |V(s) - s| is not below fixedness_tol.
    """
    residual = fixedness_residual(p, s)
    if not residual < fixedness_tol:
        raise NotAFixedPoint(f"{s.as_tuple()} is not fixed: |V(s) - s| = {residual:.3g}")
    spectrum = eigenvalues4(jacobian(p, s))
    kind = classify_spectrum(spectrum, unit_circle_tol)
    logger.debug(f"{s.as_tuple()} classified as {kind.value} with moduli {spectrum.moduli}")
    return Classification(kind=kind, spectrum=spectrum, unit_circle_tol=unit_circle_tol)


def _require_lambda16_region(p: Params) -> None:
    if p.beta2 != 0.0:
        raise PreconditionViolated(f"lambda16 spectrum needs beta2 = 0, got {p.beta2!r}")
    if p.b <= 0.0 or p.alpha <= 0.0:
        raise PreconditionViolated("lambda16 spectrum needs b > 0 and alpha > 0")
    if p.beta1 * p.k1 <= p.b + p.alpha:
        raise PreconditionViolated("lambda16 spectrum needs beta1*k1 > b+alpha")


def lambda16_force(p: Params) -> float:
    """A = k1*u at lambda16, i.e. b(beta1*k1 - b - alpha)/(beta1(b + alpha))"""
    return p.b * (p.beta1 * p.k1 - p.b - p.alpha) / (p.beta1 * (p.b + p.alpha))


def lambda16_multipliers(p: Params) -> Tuple[complex, complex, complex, complex]:
    """
    (mu1, mu2, mu3, mu4) at lambda16 in closed form.

    mu1 = mu2 = 1 - b. mu3, mu4 are the roots of
    mu^2 - (2 - b - beta1*A) mu + beta1*A*alpha + (1 - b)(1 - beta1*A) = 0;
    for a complex pair mu3 carries the negative imaginary part.

    Raises:
        PreconditionViolated: outside beta2 = 0, b > 0, alpha > 0, beta1*k1 > b+alpha.
    """
    _require_lambda16_region(p)
    b, alpha = p.b, p.alpha
    ba = b * (p.beta1 * p.k1 - b - alpha) / (b + alpha)  # beta1*A
    disc = (b - ba) ** 2 - 4.0 * ba * alpha
    trace = 2.0 - b - ba
    if disc >= 0:
        root = math.sqrt(disc)
        mu3, mu4 = complex((trace - root) / 2.0), complex((trace + root) / 2.0)
    else:
        half_im = math.sqrt(-disc) / 2.0
        mu3, mu4 = complex(trace / 2.0, -half_im), complex(trace / 2.0, half_im)
    return (complex(1.0 - b), complex(1.0 - b), mu3, mu4)


def lambda16_spectrum(p: Params) -> Spectrum:
    return Spectrum.from_values(lambda16_multipliers(p))


def lambda16_pair_modulus(p: Params) -> float:
    """|mu3| = |mu4| when the pair is complex: sqrt(1 - beta1*A(1 - alpha) - b(1 - beta1*A))"""
    _require_lambda16_region(p)
    ba = p.beta1 * lambda16_force(p)
    return math.sqrt(1.0 - ba * (1.0 - p.alpha) - p.b * (1.0 - ba))


@dataclass(frozen=True)
class ReducedState:
    """
    State of the reduced operator: u, z = y + v, and x as an exogenous input.
    """
    u: float
    z: float
    x_context: float

    def __post_init__(self):
        tol = DYNAMICS["tol_simplex"]
        for name in ("u", "z", "x_context"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise NotInSimplex(f"{name} is not finite: {value!r}")
            object.__setattr__(self, name, value)
        if self.u < -tol or self.z < -tol or self.u + self.z > 1.0 + tol:
            raise NotInSimplex(f"(u={self.u}, z={self.z}) needs u, z >= 0 and u + z <= 1")
        if not -tol <= self.x_context <= 1.0 + tol:
            raise NotInSimplex(f"x_context must lie in [0, 1], got {self.x_context}")

    @classmethod
    def from_point(cls, s: SimplexPoint) -> "ReducedState":
        return cls(u=s.u, z=s.y + s.v, x_context=s.x)

    @classmethod
    def _unchecked(cls, u: float, z: float, x_context: float) -> "ReducedState":
        # Images of W under an exogenous x_context may leave the triangle
        state = object.__new__(cls)
        object.__setattr__(state, "u", float(u))
        object.__setattr__(state, "z", float(z))
        object.__setattr__(state, "x_context", float(x_context))
        return state


def reduced_operator_step(p: Params, r: ReducedState) -> ReducedState:
    """
    W(u, z) = (u - b*u - alpha*u + beta1*k1*u*x, z - b*z + alpha*u).

    Describes V projected to (u, y+v) when k2 = 0; x is carried unchanged.
    Only the input is validated: with x_context in [0, 1] chosen freely the
    image may have u + z > 1.
    """
    if p.k2 != 0.0:
        logger.debug(f"Reduced operator used with k2={p.k2}; it describes V only when k2 = 0")
    u, z, x = r.u, r.z, r.x_context
    return ReducedState._unchecked(
        u=u - p.b * u - p.alpha * u + p.beta1 * p.k1 * u * x,
        z=z - p.b * z + p.alpha * u,
        x_context=x,
    )


def invariant_set_member(p: Params, r: ReducedState) -> bool:
    """Membership in M = {b*z - alpha*u >= 0}, invariant under W when beta1*k1 <= b+alpha"""
    return p.b * r.z - p.alpha * r.u >= 0


if __name__ == "__main__":
    # For standalone testing
    logging.basicConfig(level=logging.DEBUG)

    from sisi.fixed_points import build_lambda16

    params = Params(b=0.2, alpha=0.3, beta1=0.7, beta2=0.0, k1=1.0, k2=0.3)
    point = build_lambda16(params)
    print(classify_fixed_point(params, point))
    print(lambda16_spectrum(params))
    print(f"|mu3| = {lambda16_pair_modulus(params)}")
