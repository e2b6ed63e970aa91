"""Core module initialization."""

from cauchy_lab.core.errors import (
    CauchyLabError,
    ConfigError,
    DegenerateStencilError,
    DimensionMismatchError,
    InvalidGeometryError,
    InvalidParameterError,
    NonConvergenceError,
    NormOverflowError,
    NotRectifiableError,
    PointNotOnCurveError,
    SingularPointError,
)
from cauchy_lab.core.types import (
    INDEX_TOLERANCE,
    NONCONVERGENCE_TOLERANCE,
    GridSpec,
    IndexPair,
    ProbeVerdict,
    Provenance,
    Verdict,
)

__all__ = [
    "CauchyLabError",
    "ConfigError",
    "DegenerateStencilError",
    "DimensionMismatchError",
    "InvalidGeometryError",
    "InvalidParameterError",
    "NonConvergenceError",
    "NormOverflowError",
    "NotRectifiableError",
    "PointNotOnCurveError",
    "SingularPointError",
    "INDEX_TOLERANCE",
    "NONCONVERGENCE_TOLERANCE",
    "GridSpec",
    "IndexPair",
    "ProbeVerdict",
    "Provenance",
    "Verdict",
]
