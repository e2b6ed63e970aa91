"""Modulars and Luxemburg-Nakano norms on weighted variable Lebesgue spaces.

Everything reduces to sampled data: magnitudes |f w| at quadrature points,
exponents there and arc-length quadrature weights. The norm is the root of
the modular in λ, solved for log λ with a log-sum-exp modular so that
extreme exponents neither overflow nor underflow.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from cauchy_lab.core.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NormOverflowError,
)
from cauchy_lab.exponent import ExponentFunction
from cauchy_lab.geometry import CurvePath
from cauchy_lab.weights import CompositeWeight

logger = logging.getLogger(__name__)

BRACKET = (1e-8, 1e8)
BRACKET_EXPANSIONS = 64


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex values at the curve nodes."""

    curve: CurvePath
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex).reshape(-1)
        if len(values) != self.curve.node_count:
            raise DimensionMismatchError(
                f"Function has {len(values)} values for {self.curve.node_count} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("Sampled function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, curve: CurvePath, value: complex = 1.0) -> "SampledFunction":
        return cls(curve, np.full(curve.node_count, value, dtype=complex))

    @classmethod
    def from_function(
        cls, curve: CurvePath, rule: Callable[[np.ndarray], np.ndarray]
    ) -> "SampledFunction":
        return cls(curve, np.broadcast_to(rule(curve.nodes), (curve.node_count,)))

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        return SampledFunction(self.curve, self.values + other.values)

    def __mul__(self, c: complex) -> "SampledFunction":
        return SampledFunction(self.curve, self.values * c)

    __rmul__ = __mul__


def modular_from_samples(
    magnitudes: np.ndarray, exponents: np.ndarray, weights: np.ndarray, lam: float
) -> float:
    """Σ c_i (a_i / λ)^p_i."""
    if not lam > 0.0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    a = np.asarray(magnitudes, dtype=float)
    p = np.broadcast_to(np.asarray(exponents, dtype=float), a.shape)
    c = np.broadcast_to(np.asarray(weights, dtype=float), a.shape)
    live = (a > 0.0) & (c > 0.0)
    if not live.any():
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.exp(_log_modular(a[live], p[live], c[live], np.log(lam))))


def _log_modular(a: np.ndarray, p: np.ndarray, c: np.ndarray, log_lam: float) -> float:
    return float(logsumexp(np.log(c) + p * (np.log(a) - log_lam)))


def luxemburg_from_samples(
    magnitudes: np.ndarray, exponents: np.ndarray, weights: np.ndarray
) -> float:
    """inf{λ > 0 : Σ c_i (a_i/λ)^p_i <= 1}; 0 for a vanishing sample."""
    a = np.asarray(magnitudes, dtype=float)
    p = np.broadcast_to(np.asarray(exponents, dtype=float), a.shape)
    c = np.broadcast_to(np.asarray(weights, dtype=float), a.shape)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise NormOverflowError("Non-finite integrand samples")
    live = (a > 0.0) & (c > 0.0)
    if not live.any():
        return 0.0
    a, p, c = a[live], p[live], c[live]
    if np.all(p == p[0]):
        return float(np.exp(_log_modular(a, p, c, 0.0) / p[0]))

    def F(u: float) -> float:
        return _log_modular(a, p, c, u)

    lo, hi = np.log(BRACKET[0]), np.log(BRACKET[1])
    for _ in range(BRACKET_EXPANSIONS):
        if F(lo) >= 0.0:
            break
        lo -= 16.0
        logger.debug(f"Expanding Luxemburg bracket down to exp({lo:.1f})")
    for _ in range(BRACKET_EXPANSIONS):
        if F(hi) <= 0.0:
            break
        hi += 16.0
        logger.debug(f"Expanding Luxemburg bracket up to exp({hi:.1f})")
    if not (F(lo) >= 0.0 >= F(hi)):
        raise NormOverflowError("Luxemburg modular cannot be bracketed")

    u = brentq(F, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=400)
    norm = float(np.exp(u))
    if not np.isfinite(norm):
        raise NormOverflowError("Luxemburg norm overflowed")
    return norm


def _nodal_magnitudes(f: SampledFunction, w: Optional[CompositeWeight]) -> np.ndarray:
    magnitudes = np.abs(f.values)
    if w is None or w.is_trivial:
        return magnitudes
    return magnitudes * w.nodal_values(f.curve)


def modular(
    f: SampledFunction,
    w: Optional[CompositeWeight],
    p: ExponentFunction,
    lam: float,
    curve: Optional[CurvePath] = None,
) -> float:
    """Trapezoidal ∫_Γ |f w / λ|^p(τ) |dτ|."""
    curve = curve or f.curve
    if not lam > 0.0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    _check_shared(f, p, curve)
    return modular_from_samples(_nodal_magnitudes(f, w), p.values, curve.node_cells(), lam)


def luxemburg_norm(
    f: SampledFunction,
    w: Optional[CompositeWeight],
    p: ExponentFunction,
    curve: Optional[CurvePath] = None,
) -> float:
    """‖f‖ in L^p(·)(Γ, w) with trapezoidal quadrature."""
    curve = curve or f.curve
    _check_shared(f, p, curve)
    return luxemburg_from_samples(_nodal_magnitudes(f, w), p.values, curve.node_cells())


def _check_shared(f: SampledFunction, p: ExponentFunction, curve: CurvePath):
    if f.curve.node_count != curve.node_count or p.curve.node_count != curve.node_count:
        raise DimensionMismatchError("Function, exponent and curve must share nodes")
