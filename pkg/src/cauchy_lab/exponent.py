"""Variable exponents p(·) on a curve."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from cauchy_lab.core.errors import DimensionMismatchError, InvalidParameterError
from cauchy_lab.geometry import CurvePath

logger = logging.getLogger(__name__)

# Radial exponents are clipped into this range.
RADIAL_CLIP = (1.01, 100.0)

# Pairs farther apart than this are outside the Dini-Lipschitz condition.
DINI_CUTOFF = 0.5


@dataclass(frozen=True, eq=False)
class ExponentFunction:
    """Exponent sampled at the curve nodes, piecewise linear in arc length."""

    curve: CurvePath
    values: np.ndarray
    label: str = "p"
    p_min: float = field(init=False)
    p_max: float = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if len(values) != self.curve.node_count:
            raise DimensionMismatchError(
                f"Exponent has {len(values)} values for {self.curve.node_count} nodes"
            )
        if not np.all(np.isfinite(values)) or values.min() <= 1.0:
            raise InvalidParameterError(
                f"Exponent '{self.label}' must be finite and > 1 (min {values.min():.6g})"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "p_min", float(values.min()))
        object.__setattr__(self, "p_max", float(values.max()))

    @classmethod
    def constant(cls, curve: CurvePath, value: float) -> "ExponentFunction":
        return cls(curve, np.full(curve.node_count, float(value)), label=f"constant {value:g}")

    @classmethod
    def from_values(
        cls, curve: CurvePath, values: Sequence[float], label: str = "p"
    ) -> "ExponentFunction":
        return cls(curve, np.asarray(values, dtype=float), label=label)

    @classmethod
    def from_function(
        cls, curve: CurvePath, rule: Callable[[np.ndarray], np.ndarray], label: str = "p"
    ) -> "ExponentFunction":
        """Sample ``rule`` (complex points -> exponents) at the nodes."""
        return cls(curve, np.asarray(rule(curve.nodes), dtype=float), label=label)

    @classmethod
    def radial(
        cls, curve: CurvePath, center: complex, base: float, amplitude: float
    ) -> "ExponentFunction":
        """p(τ) = base + amplitude / (2 - log|τ - center|), clipped to RADIAL_CLIP."""
        dist = np.abs(curve.nodes - center)
        with np.errstate(divide="ignore"):
            denominator = 2.0 - np.log(dist)
        if np.any(denominator <= 0.0):
            raise InvalidParameterError(
                f"Radial exponent undefined: curve reaches distance >= e^2 from {center}"
            )
        values = np.clip(base + amplitude / denominator, *RADIAL_CLIP)
        return cls(curve, values, label=f"radial base={base:g} amplitude={amplitude:g}")

    @property
    def is_constant(self) -> bool:
        return self.p_min == self.p_max

    def at_arc(self, s: np.ndarray) -> np.ndarray:
        """Linear interpolation in arc length."""
        s = np.asarray(s, dtype=float)
        arc = self.curve.cumulative_lengths
        values = self.values
        if self.curve.is_closed:
            s = np.mod(s, self.curve.length)
            values = np.append(values, values[0])
        return np.interp(s, arc, values)

    def at(self, t: complex) -> float:
        """Value at a point of the curve."""
        return float(self.at_arc(self.curve.require_on_curve(t)))

    def conjugate(self) -> "ExponentFunction":
        return conjugate(self)

    def ratio(self, other: "ExponentFunction") -> np.ndarray:
        """Nodal values of self / other; may dip below 1."""
        return self.values / other.values


def conjugate(p: ExponentFunction) -> ExponentFunction:
    """q(τ) = p(τ) / (p(τ) - 1)."""
    return ExponentFunction(p.curve, p.values / (p.values - 1.0), label=f"conjugate of {p.label}")


def dini_lipschitz_modulus(
    p: ExponentFunction,
    curve: Optional[CurvePath] = None,
    node_indices: Optional[Sequence[int]] = None,
    chunk: int = 256,
) -> float:
    """Smallest A with |p(τ) - p(t)| <= A / (-log|τ - t|) over node pairs.

    Only pairs with 0 < |τ - t| <= 1/2 count. A jump in p shows up as a
    value growing like log(1/h) under refinement instead of an infinite
    sentinel.
    """
    curve = curve or p.curve
    if curve.node_count != p.curve.node_count:
        raise DimensionMismatchError("Exponent and curve do not share nodes")
    if p.is_constant:
        return 0.0

    idx = np.arange(curve.node_count) if node_indices is None else np.asarray(node_indices)
    z = curve.nodes[idx]
    v = p.values[idx]
    best = 0.0
    for start in range(0, len(z), chunk):
        rows = slice(start, start + chunk)
        dist = np.abs(z[rows, None] - z[None, :])
        jump = np.abs(v[rows, None] - v[None, :])
        inside = (dist > 0.0) & (dist <= DINI_CUTOFF)
        if not inside.any():
            continue
        with np.errstate(divide="ignore"):
            bound = np.where(inside, jump * -np.log(np.where(inside, dist, 1.0)), 0.0)
        best = max(best, float(bound.max()))
    logger.debug(f"Dini-Lipschitz modulus of '{p.label}' on {len(z)} nodes: {best:.6g}")
    return best
