"""Exception hierarchy for cauchy-lab.

Divergence of a supremum is reported as a verdict, never raised.
"""

from typing import Optional


class CauchyLabError(Exception):
    """Base class for all toolkit errors."""


class InvalidGeometryError(CauchyLabError, ValueError):
    """Curve input cannot be turned into a simple polyline."""


class NotRectifiableError(CauchyLabError, ValueError):
    """Requested curve has infinite length."""


class PointNotOnCurveError(CauchyLabError, ValueError):
    """A point expected on the curve lies farther than the node tolerance."""


class InvalidParameterError(CauchyLabError, ValueError):
    """A numeric parameter is outside its admissible range."""


class SingularPointError(CauchyLabError, ValueError):
    """A weight was evaluated exactly at one of its anchors."""


class DimensionMismatchError(CauchyLabError, ValueError):
    """Operator and function live on different node sets."""


class NormOverflowError(CauchyLabError, ArithmeticError):
    """The modular stayed infinite for every admissible lambda."""


class NonConvergenceError(CauchyLabError, ArithmeticError):
    """Two characterizations of the same index disagree beyond tolerance."""

    def __init__(self, message: str, estimates: Optional[dict] = None):
        super().__init__(message)
        self.estimates = estimates or {}


class DegenerateStencilError(CauchyLabError, ValueError):
    """Too few nodes to build the principal-value stencil."""


class ConfigError(CauchyLabError, ValueError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
