"""Radial factors, composite radial oscillating weights and Matuszewska-Orlicz indices.

A radial factor ρ: (0, |Γ|] -> (0, ∞) is stored through ``log ρ``. The
closed-form families carry exact dilation functions Φ⁰ and indices; the
numeric limsup estimator works in log y and checks them.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from cauchy_lab.core.errors import (
    InvalidParameterError,
    NonConvergenceError,
    SingularPointError,
)
from cauchy_lab.core.types import (
    INDEX_TOLERANCE,
    NONCONVERGENCE_TOLERANCE,
    IndexPair,
    Provenance,
)
from cauchy_lab.geometry import CurvePath
from cauchy_lab.submult import IndexEstimate, SubmultProfile, indices

logger = logging.getLogger(__name__)

# Tail fraction of an explicit y-grid for the limsup y -> 0 in Φ⁰.
PHI0_TAIL_FRACTION = 0.25

# Default tail: -log y log-spaced over this range. The log-log oscillating
# family needs several e-folds of log(1/y) to show both extreme slopes.
PHI0_TAIL_DEPTH = (1e5, 1e10)
PHI0_TAIL_POINTS = 2048

# 𝕎 membership: x^-(m - margin) ρ and x^(M + margin) / ρ must keep their
# almost-increasing constants when the grid reaches twice as deep.
MEMBERSHIP_MARGIN = 0.05
MEMBERSHIP_LOWER = 1e-12
MEMBERSHIP_GROWTH = 1.5

# Dilations 2^(k/4), |k| <= 80, sampled for index estimation.
PROFILE_STEPS = np.arange(-80, 81)

# Distance below which a point counts as the anchor itself.
ANCHOR_TOLERANCE = 1e-14


class FactorKind(str, Enum):
    POWER = "power"
    LOG_POWER = "log-power"
    OSCILLATING = "oscillating"
    WAVE = "wave"
    TABLE = "table"
    PRODUCT = "product"


@dataclass(frozen=True, eq=False)
class RadialFactor:
    """A function ρ in the class 𝕎, raised to the power ``scale``.

    Families (before scaling):

    - power:        x^γ
    - log-power:    x^γ (1 + |log x|)^β
    - oscillating:  x^(γ + A sin(B log(1 + |log x|)))
    - wave:         x^γ exp(A sin(B log x))
    - table:        log-linear interpolation of sampled (x, ρ(x))
    - product:      pointwise product of components
    """

    kind: FactorKind
    gamma: float = 0.0
    beta: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    scale: float = 1.0
    log_x: Optional[np.ndarray] = field(default=None, repr=False)
    log_rho: Optional[np.ndarray] = field(default=None, repr=False)
    components: Tuple["RadialFactor", ...] = ()
    domain_cap: float = np.inf
    label: str = ""

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.kind == FactorKind.POWER:
            base = f"power {self.gamma:g}"
        elif self.kind == FactorKind.LOG_POWER:
            base = f"log-power {self.gamma:g} {self.beta:g}"
        elif self.kind in (FactorKind.OSCILLATING, FactorKind.WAVE):
            base = f"{self.kind.value} {self.gamma:g} {self.amplitude:g} {self.frequency:g}"
        elif self.kind == FactorKind.PRODUCT:
            base = " * ".join(c.label for c in self.components)
        else:
            base = "table"
        return base if self.scale == 1.0 else f"({base})^{self.scale:g}"

    # construction

    @classmethod
    def power(cls, gamma: float) -> "RadialFactor":
        return cls(FactorKind.POWER, gamma=gamma)

    @classmethod
    def log_power(cls, gamma: float, beta: float) -> "RadialFactor":
        return cls(FactorKind.LOG_POWER, gamma=gamma, beta=beta)

    @classmethod
    def oscillating(cls, gamma: float, amplitude: float, frequency: float) -> "RadialFactor":
        return cls(FactorKind.OSCILLATING, gamma=gamma, amplitude=amplitude, frequency=frequency)

    @classmethod
    def wave(cls, gamma: float, amplitude: float, frequency: float) -> "RadialFactor":
        return cls(FactorKind.WAVE, gamma=gamma, amplitude=amplitude, frequency=frequency)

    @classmethod
    def table(
        cls, x: Sequence[float], rho: Sequence[float], label: str = "table"
    ) -> "RadialFactor":
        x = np.asarray(x, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if x.ndim != 1 or x.shape != rho.shape or len(x) < 2:
            raise InvalidParameterError("Table needs two equal-length columns with >= 2 rows")
        if np.any(x <= 0.0) or np.any(rho <= 0.0) or np.any(np.diff(x) <= 0.0):
            raise InvalidParameterError("Table abscissae must increase and all values be positive")
        return cls(FactorKind.TABLE, log_x=np.log(x), log_rho=np.log(rho), label=label)

    @classmethod
    def from_file(cls, path: Path) -> "RadialFactor":
        """Two-column `x rho(x)` text table."""
        try:
            data = np.loadtxt(path, ndmin=2)
        except (OSError, ValueError) as e:
            raise InvalidParameterError(f"Cannot read weight table {path}: {e}") from e
        if data.shape[1] != 2:
            raise InvalidParameterError(f"Weight table {path} must have two columns")
        return cls.table(data[:, 0], data[:, 1], label=f"table {Path(path).name}")

    @classmethod
    def product(cls, *factors: "RadialFactor") -> "RadialFactor":
        return cls(FactorKind.PRODUCT, components=tuple(factors))

    def powered(self, exponent: float) -> "RadialFactor":
        """ρ^exponent."""
        return replace(self, scale=self.scale * exponent, label=f"({self.label})^{exponent:g}")

    def capped(self, domain_cap: float) -> "RadialFactor":
        return replace(self, domain_cap=domain_cap)

    # evaluation

    def _base_log(self, log_x: np.ndarray) -> np.ndarray:
        g, A, B = self.gamma, self.amplitude, self.frequency
        if self.kind == FactorKind.POWER:
            return g * log_x
        if self.kind == FactorKind.LOG_POWER:
            return g * log_x + self.beta * np.log1p(np.abs(log_x))
        if self.kind == FactorKind.OSCILLATING:
            return log_x * (g + A * np.sin(B * np.log1p(np.abs(log_x))))
        if self.kind == FactorKind.WAVE:
            return g * log_x + A * np.sin(B * log_x)
        if self.kind == FactorKind.TABLE:
            lx, lr = self.log_x, self.log_rho
            inside = np.interp(log_x, lx, lr)
            left = lr[0] + (log_x - lx[0]) * (lr[1] - lr[0]) / (lx[1] - lx[0])
            right = lr[-1] + (log_x - lx[-1]) * (lr[-1] - lr[-2]) / (lx[-1] - lx[-2])
            return np.where(log_x < lx[0], left, np.where(log_x > lx[-1], right, inside))
        return sum(c.log_value_from_log(log_x) for c in self.components)

    def log_value_from_log(self, log_x: np.ndarray) -> np.ndarray:
        return self.scale * self._base_log(np.asarray(log_x, dtype=float))

    def log_value(self, x: np.ndarray) -> np.ndarray:
        """log ρ(x) for x > 0."""
        return self.log_value_from_log(np.log(np.asarray(x, dtype=float)))

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_value(x))

    @property
    def is_trivial(self) -> bool:
        """True when ρ ≡ 1."""
        if self.scale == 0.0:
            return True
        if self.kind == FactorKind.POWER:
            return self.gamma == 0.0
        if self.kind == FactorKind.PRODUCT:
            return all(c.is_trivial for c in self.components)
        return False

    # closed forms

    @property
    def spread(self) -> float:
        """Half-width A sqrt(1 + B^2) of the oscillating index band; 0 when B = 0."""
        if self.kind != FactorKind.OSCILLATING or self.frequency == 0.0:
            return 0.0
        return float(self.amplitude * np.hypot(1.0, self.frequency))

    @property
    def has_closed_form(self) -> bool:
        if self.kind == FactorKind.TABLE:
            return False
        if self.kind == FactorKind.PRODUCT:
            oscillating = [
                c for c in self.components
                if c.kind not in (FactorKind.POWER, FactorKind.LOG_POWER)
            ]
            return len(oscillating) <= 1 and all(c.has_closed_form for c in self.components)
        return True

    def log_phi0_closed(self, log_x: np.ndarray) -> np.ndarray:
        """log Φ⁰(x) for the closed-form families."""
        if not self.has_closed_form:
            raise InvalidParameterError(
                f"Factor '{self.label}' has no closed-form dilation function"
            )
        log_x = np.asarray(log_x, dtype=float)
        s, g, A, B = self.scale, self.gamma, self.amplitude, self.frequency
        if self.kind in (FactorKind.POWER, FactorKind.LOG_POWER):
            return s * g * log_x
        if self.kind == FactorKind.OSCILLATING:
            return s * g * log_x + abs(s) * self.spread * np.abs(log_x)
        if self.kind == FactorKind.WAVE:
            return s * g * log_x + 2.0 * abs(s) * A * np.abs(np.sin(0.5 * B * log_x))
        return sum(c.powered(s).log_phi0_closed(log_x) for c in self.components)

    def closed_indices(self) -> Optional[IndexPair]:
        """(m, M) for the closed-form families, None for tables."""
        if not self.has_closed_form:
            return None
        if self.kind == FactorKind.PRODUCT:
            parts = [c.powered(self.scale).closed_indices() for c in self.components]
            return IndexPair(sum(p.lower for p in parts), sum(p.upper for p in parts))
        if self.kind == FactorKind.OSCILLATING:
            spread = self.spread
            lower, upper = self.gamma - spread, self.gamma + spread
        else:
            lower = upper = self.gamma
        if self.scale >= 0.0:
            return IndexPair(self.scale * lower, self.scale * upper)
        return IndexPair(self.scale * upper, self.scale * lower)


def phi0_numeric(
    rho: RadialFactor, x: np.ndarray, y_grid: Optional[np.ndarray] = None
) -> np.ndarray:
    """Tail-max estimate of limsup_{y->0} ρ(xy)/ρ(y).

    With ``y_grid`` the tail is its smallest 25%. Without one the tail is
    log y = -PHI0_TAIL_DEPTH, evaluated in log space. Points with xy beyond
    the factor's domain are dropped; an empty tail is an error.
    """
    if y_grid is None:
        log_tail = -np.geomspace(*PHI0_TAIL_DEPTH, PHI0_TAIL_POINTS)
    else:
        y = np.sort(np.asarray(y_grid, dtype=float))
        log_tail = np.log(y[: max(1, int(np.ceil(PHI0_TAIL_FRACTION * len(y))))])
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0.0):
        raise InvalidParameterError("phi0 needs x > 0")

    log_xy = np.log(x)[:, None] + log_tail[None, :]
    ok = log_xy <= np.log(rho.domain_cap)
    if not ok.any(axis=1).all():
        raise InvalidParameterError("phi0 y-grid tail leaves the factor domain for some x")
    log_ratio = (
        rho.log_value_from_log(np.where(ok, log_xy, 0.0))
        - rho.log_value_from_log(log_tail)[None, :]
    )
    return np.exp(np.where(ok, log_ratio, -np.inf).max(axis=1))


def phi0(rho: RadialFactor, x, y_grid: Optional[np.ndarray] = None):
    """Φ⁰_ρ(x), exact for the closed-form families."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if rho.has_closed_form and y_grid is None:
        if np.any(xs <= 0.0):
            raise InvalidParameterError("phi0 needs x > 0")
        values = np.exp(rho.log_phi0_closed(np.log(xs)))
    else:
        values = phi0_numeric(rho, xs, y_grid)
    return float(values[0]) if scalar else values


def almost_increasing_constant(
    rho: RadialFactor,
    grid_size: int = 256,
    lower: float = 1e-12,
    upper: Optional[float] = None,
) -> float:
    """max over grid pairs x <= y of ρ(x)/ρ(y); at least 1."""
    if grid_size < 64:
        raise InvalidParameterError(f"grid_size must be >= 64, got {grid_size}")
    upper = min(rho.domain_cap, 1.0) if upper is None else upper
    logs = rho.log_value(np.geomspace(lower, upper, grid_size))
    suffix_min = np.minimum.accumulate(logs[::-1])[::-1]
    return float(np.exp(max(0.0, float((logs - suffix_min).max()))))


def phi0_profile(rho: RadialFactor, numeric: bool = False) -> SubmultProfile:
    """Φ⁰_ρ sampled at x = 2^(k/4), from the tail estimator when ``numeric``."""
    x = 2.0 ** (PROFILE_STEPS / 4.0)
    values = phi0_numeric(rho, x) if numeric else phi0(rho, x)
    return SubmultProfile(x=x, values=values, provenance=Provenance.PHI0, label=rho.label)


def membership_check(
    rho: RadialFactor, pair: Tuple[float, float], margin: float = MEMBERSHIP_MARGIN
) -> Tuple[bool, float]:
    """Evidence that ρ is in 𝕎 with indices ``pair``; returns (ok, constant).

    x^-(m - margin) ρ(x) and x^(M + margin) / ρ(x) are almost increasing
    for ρ in 𝕎. ``constant`` is the larger of their two constants, and
    ``ok`` says neither grew past MEMBERSHIP_GROWTH when the grid's lower
    end halved.
    """
    lower_index, upper_index = pair
    sides = (
        RadialFactor.product(rho, RadialFactor.power(margin - lower_index)),
        RadialFactor.product(RadialFactor.power(upper_index + margin), rho.powered(-1.0)),
    )
    upper = min(rho.domain_cap, 1.0)
    constants = [almost_increasing_constant(f, lower=MEMBERSHIP_LOWER, upper=upper) for f in sides]
    deeper = [
        almost_increasing_constant(f, lower=0.5 * MEMBERSHIP_LOWER, upper=upper) for f in sides
    ]
    growth = max(d / c for d, c in zip(deeper, constants))
    return growth <= MEMBERSHIP_GROWTH, float(max(constants))


def mo_indices(rho: RadialFactor) -> IndexPair:
    """Matuszewska-Orlicz indices (m, M) of ρ.

    The numeric Φ⁰ profile is always estimated. Closed forms must match it
    within INDEX_TOLERANCE (a warning) and NONCONVERGENCE_TOLERANCE (an
    error); tables return the profile estimate. Failed profile checks and a
    failed 𝕎 membership check raise as well.
    """
    closed = rho.closed_indices()
    if closed is not None and rho.kind == FactorKind.POWER:
        return closed

    estimate: IndexEstimate = indices(phi0_profile(rho, numeric=True))
    if estimate.nonconverged:
        raise NonConvergenceError(
            f"Index estimates for '{rho.label}' disagree: {estimate.describe()}",
            estimates={"estimate": estimate},
        )
    pair = estimate.pair if closed is None else closed
    if closed is not None:
        drift = max(abs(closed.lower - estimate.lower), abs(closed.upper - estimate.upper))
        if drift > NONCONVERGENCE_TOLERANCE:
            raise NonConvergenceError(
                f"Sampled indices of '{rho.label}' drift {drift:.3g} from the closed form",
                estimates={"estimate": estimate, "closed": closed},
            )
        if drift > INDEX_TOLERANCE:
            logger.warning(
                f"Sampled indices of '{rho.label}' drift {drift:.3g} from the closed form"
            )

    ok, constant = membership_check(rho, pair)
    if not ok:
        raise NonConvergenceError(
            f"'{rho.label}' is not in 𝕎 at grid scale: almost-increasing constant "
            f"{constant:.4g} keeps growing as the grid deepens"
        )
    return pair


@dataclass(frozen=True, eq=False)
class CompositeWeight:
    """w(t) = c · ∏_k ρ_k(|t - t_k|) with pairwise distinct anchors."""

    factors: Tuple[Tuple[complex, RadialFactor], ...] = ()
    constant: float = 1.0

    def __post_init__(self):
        factors = tuple((complex(a), f) for a, f in self.factors)
        anchors = [a for a, _ in factors]
        for i, a in enumerate(anchors):
            if any(abs(a - b) <= ANCHOR_TOLERANCE for b in anchors[:i]):
                raise InvalidParameterError(f"Duplicate weight anchor {a}")
        if not self.constant > 0.0:
            raise InvalidParameterError(f"Weight constant must be positive, got {self.constant}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def unit(cls) -> "CompositeWeight":
        return cls()

    @property
    def anchors(self) -> Tuple[complex, ...]:
        return tuple(a for a, _ in self.factors)

    @property
    def is_trivial(self) -> bool:
        return self.constant == 1.0 and all(f.is_trivial for _, f in self.factors)

    def log_evaluate(self, points: np.ndarray) -> np.ndarray:
        """log w at the given points (anchors clamp to a tiny distance)."""
        points = np.asarray(points, dtype=complex)
        total = np.full(points.shape, np.log(self.constant))
        for anchor, factor in self.factors:
            total = total + factor.log_value(np.maximum(np.abs(points - anchor), 1e-300))
        return total

    def local_log_factor(self, t: complex) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        """log ρ_k as a function of log x for the factor anchored at t, if any."""
        for anchor, factor in self.factors:
            if abs(t - anchor) <= ANCHOR_TOLERANCE and not factor.is_trivial:
                return factor.log_value_from_log
        return None

    def evaluate(self, t: complex) -> float:
        for anchor, factor in self.factors:
            if abs(t - anchor) <= ANCHOR_TOLERANCE and not factor.is_trivial:
                raise SingularPointError(f"Weight factor '{factor.label}' is singular at {anchor}")
        return float(np.exp(self.log_evaluate(np.array([t]))[0]))

    def nodal_log_values(self, curve: CurvePath) -> np.ndarray:
        """log w at the curve nodes.

        A node sitting on an anchor takes the value at the arc midpoint of
        its adjacent cell.
        """
        points = np.array(curve.nodes)
        for anchor in self.anchors:
            hits = np.flatnonzero(np.abs(points - anchor) <= ANCHOR_TOLERANCE)
            for i in hits:
                seg = curve.segment_lengths
                if i < len(seg):
                    shift = curve.node_arc[i] + 0.5 * seg[i]
                else:
                    shift = curve.node_arc[i] - 0.5 * seg[i - 1]
                points[i] = curve.point_at_arc(shift)
        return self.log_evaluate(points)

    def nodal_values(self, curve: CurvePath) -> np.ndarray:
        return np.exp(self.nodal_log_values(curve))

    def powered(self, exponent: float) -> "CompositeWeight":
        """w^exponent, factor by factor."""
        return CompositeWeight(
            tuple((a, f.powered(exponent)) for a, f in self.factors),
            constant=self.constant**exponent,
        )

    def scaled(self, c: float) -> "CompositeWeight":
        return CompositeWeight(self.factors, constant=self.constant * c)

    def describe(self) -> str:
        if not self.factors:
            return f"constant {self.constant:g}"
        parts = [f"{f.label}@({a.real:g},{a.imag:g})" for a, f in self.factors]
        return " * ".join(parts)


def khvedelidze_weight(anchors: Iterable[complex], lambdas: Iterable[float]) -> CompositeWeight:
    """∏_k |t - t_k|^λ_k."""
    return CompositeWeight(
        tuple((a, RadialFactor.power(lam)) for a, lam in zip(anchors, lambdas))
    )
