"""
Exception hierarchy shared by all SISI modules.

The CLI maps every SisiError to exit code 1.
"""

from typing import Optional, Sequence


class SisiError(Exception):
    """Base class for domain errors"""


class InvalidParameters(SisiError, ValueError):
    """A model parameter is negative or not finite"""


class NotInSimplex(SisiError, ValueError):
    """A point does not lie on the simplex S^3"""


class LeftSimplex(SisiError):
    """The operator image left the simplex (only possible for parameters violating (cond))"""

    def __init__(self, message: str, coords: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.coords = tuple(coords) if coords is not None else None


class PreconditionViolated(SisiError):
    """A closed form was requested outside the parameter region where it holds"""


class DegenerateParameters(SisiError):
    """The force equation cannot be resolved to a finite root"""


class InconsistentRoot(SisiError):
    """A value passed as force of infection is not a root of the fixed point equation"""


class ConvergenceFailure(SisiError):
    """The eigenvalue solver did not converge"""


class NotAFixedPoint(SisiError):
    """Stability classification was requested for a point that is not fixed"""


class InvalidScenarioConfig(SisiError):
    """A batch experiment is configured inconsistently"""


class ReportFormatError(SisiError):
    """A machine-output file does not parse under its declared schema"""
