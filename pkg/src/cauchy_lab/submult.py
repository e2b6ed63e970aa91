"""Indices of regular submultiplicative functions and of powerlikeness.

A profile is a submultiplicative function Φ sampled on a log grid that
covers [2^-20, 2^20]. Its indices are computed two ways: the sup/inf over
the grid and the log-log limit read off the grid tails.

V⁰_t w is a limsup as R -> 0. Near any point of a polyline the portions
Γ(t,R) are straight rays of length R once R is below the local cell size,
so the portion mean of log ρ(|τ - t|) is ∫_0^1 log ρ(Rv) dv and every
factor anchored elsewhere tends to a constant. That limit is evaluated in
log R directly, far below the radii a float can represent.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.laguerre import laggauss

from cauchy_lab.core.errors import InvalidParameterError
from cauchy_lab.core.types import (
    INDEX_TOLERANCE,
    NONCONVERGENCE_TOLERANCE,
    IndexPair,
    Provenance,
)
from cauchy_lab.geometry import CurvePath, portion
from cauchy_lab.quadrature import portion_rule

if TYPE_CHECKING:
    from cauchy_lab.weights import CompositeWeight

logger = logging.getLogger(__name__)

PROFILE_SPAN = 2.0**20
TAIL_JS = (10, 20)
SUBMULT_SLACK = 1e-6
# Profiles sampled from a limsup carry the tail estimator's resolution.
SAMPLED_SUBMULT_SLACK = 1e-3

V0_R_RANGE = (1e-6, 0.1)
V0_R_POINTS = 128
V0_TAIL_FRACTION = 0.25
POWERLIKENESS_JS = np.arange(-20, 21)

# -log(R / d_t) over the log-space tail of V⁰.
V0_DEEP_DEPTH = (1e5, 1e10)
V0_DEEP_POINTS = 2048
LAGUERRE_NODES = 64


@dataclass(frozen=True, eq=False)
class SubmultProfile:
    """Φ sampled at increasing x > 0."""

    x: np.ndarray
    values: np.ndarray
    provenance: Provenance = Provenance.SYNTHETIC
    label: str = ""
    log_x: np.ndarray = field(init=False, repr=False)
    log_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        values = np.asarray(self.values, dtype=float)
        order = np.argsort(x)
        x, values = x[order], values[order]
        if x.shape != values.shape or x.ndim != 1:
            raise InvalidParameterError("Profile abscissae and values must be matching 1-D arrays")
        if np.any(x <= 0.0) or np.any(np.diff(x) <= 0.0):
            raise InvalidParameterError("Profile abscissae must be positive and distinct")
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise InvalidParameterError(f"Profile '{self.label}' must be finite and positive")
        if x[0] > PROFILE_SPAN**-1 * (1 + 1e-12) or x[-1] < PROFILE_SPAN * (1 - 1e-12):
            raise InvalidParameterError("Profile must cover [2^-20, 2^20]")
        for name, value in (("x", x), ("values", values)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "log_x", np.log(x))
        object.__setattr__(self, "log_values", np.log(values))

    @classmethod
    def from_function(
        cls,
        rule: Callable[[np.ndarray], np.ndarray],
        x: Optional[Sequence[float]] = None,
        provenance: Provenance = Provenance.SYNTHETIC,
        label: str = "",
    ) -> "SubmultProfile":
        """Sample ``rule`` on ``x`` (default 2^(k/4), |k| <= 80)."""
        x = 2.0 ** (np.arange(-80, 81) / 4.0) if x is None else np.asarray(x, dtype=float)
        return cls(x=x, values=np.asarray(rule(x), dtype=float), provenance=provenance, label=label)

    def log_value_at(self, x) -> np.ndarray:
        """log Φ by linear interpolation in log-log coordinates."""
        return np.interp(np.log(x), self.log_x, self.log_values)

    def ratio_at(self, x: float, y: float) -> float:
        """Φ(xy) / (Φ(x) Φ(y))."""
        return float(
            np.exp(self.log_value_at(x * y) - self.log_value_at(x) - self.log_value_at(y))
        )

    def regularity_bound(self) -> float:
        """max Φ over [1/2, 2]."""
        return float(np.exp(self.log_value_at(np.geomspace(0.5, 2.0, 33))).max())

    def _lattice(self) -> Optional[int]:
        """Index of x = 1 when the grid is uniform in log x and contains 1."""
        steps = np.diff(self.log_x)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            return None
        centre = int(np.argmin(np.abs(self.log_x)))
        return centre if abs(self.log_x[centre]) <= 1e-12 else None


def check_submultiplicative(
    phi: SubmultProfile, pair_count: int = 1000, seed: int = 0, slack: float = SUBMULT_SLACK
) -> Tuple[bool, float]:
    """Random-pair test of Φ(xy) <= Φ(x)Φ(y); returns (ok, worst ratio).

    On a uniform log grid the pairs are drawn so that xy is a grid point;
    otherwise xy is interpolated. ``ok`` means worst ratio <= 1 + slack.
    """
    if pair_count < 100:
        raise InvalidParameterError(f"pair_count must be >= 100, got {pair_count}")
    rng = np.random.default_rng(seed)
    n = len(phi.x)
    centre = phi._lattice()
    lv = phi.log_values

    if centre is not None:
        i = rng.integers(0, n, size=pair_count)
        lo = np.maximum(0, centre - i)
        hi = np.minimum(n - 1, n - 1 + centre - i)
        j = lo + np.floor(rng.random(pair_count) * (hi - lo + 1)).astype(int)
        j = np.minimum(j, hi)
        log_ratio = lv[i + j - centre] - lv[i] - lv[j]
    else:
        lx = phi.log_x
        a = rng.uniform(lx[0], lx[-1], size=pair_count)
        b = rng.uniform(np.maximum(lx[0] - a, lx[0]), np.minimum(lx[-1] - a, lx[-1]))
        log_ratio = np.interp(a + b, lx, lv) - np.interp(a, lx, lv) - np.interp(b, lx, lv)

    worst = float(np.exp(log_ratio.max()))
    ok = worst <= 1.0 + slack
    verdict = "ok" if ok else "violated"
    logger.debug(f"Submultiplicativity of '{phi.label}': worst ratio {worst:.6g} ({verdict})")
    return ok, worst


@dataclass(frozen=True)
class IndexEstimate:
    """Both characterizations of the lower and upper index."""

    lower: float
    upper: float
    tail_lower: float
    tail_upper: float
    submultiplicative: bool = True
    worst_ratio: float = 1.0
    regularity: float = 1.0

    @property
    def drift(self) -> float:
        return max(abs(self.lower - self.tail_lower), abs(self.upper - self.tail_upper))

    @property
    def ordered(self) -> bool:
        return self.lower <= self.upper + INDEX_TOLERANCE

    @property
    def nonconverged(self) -> bool:
        """Characterizations disagree, α > β, or the profile failed a precondition."""
        return (
            self.drift > NONCONVERGENCE_TOLERANCE
            or not self.ordered
            or not self.submultiplicative
            or not np.isfinite(self.regularity)
        )

    @property
    def agrees(self) -> bool:
        return self.drift <= INDEX_TOLERANCE

    @property
    def pair(self) -> IndexPair:
        return IndexPair(self.lower, self.upper)

    def __iter__(self) -> Iterator[float]:
        return iter(self.pair)

    def describe(self) -> str:
        return (
            f"sup/inf=({self.lower:.4f}, {self.upper:.4f}) "
            f"tail=({self.tail_lower:.4f}, {self.tail_upper:.4f})"
        )


def estimate_indices(phi: SubmultProfile) -> IndexEstimate:
    """α = sup_{x<1} log Φ/log x and β = inf_{x>1} log Φ/log x, plus tail limits."""
    lx, lv = phi.log_x, phi.log_values
    slope = np.divide(lv, lx, out=np.zeros_like(lv), where=lx != 0.0)
    below, above = lx < 0.0, lx > 0.0

    lo_j, hi_j = TAIL_JS
    small = (lx <= -lo_j * np.log(2.0) + 1e-12) & (lx >= -hi_j * np.log(2.0) - 1e-12)
    large = (lx >= lo_j * np.log(2.0) - 1e-12) & (lx <= hi_j * np.log(2.0) + 1e-12)

    return IndexEstimate(
        lower=float(slope[below].max()),
        upper=float(slope[above].min()),
        tail_lower=float(slope[small].max()),
        tail_upper=float(slope[large].min()),
    )


def indices(phi: SubmultProfile) -> IndexEstimate:
    """Indices of a profile; unpacks as (alpha, beta) from the sup/inf characterization.

    The profile is checked for regularity and submultiplicativity first; a
    failed check, α > β or disagreeing characterizations all end up in
    ``nonconverged``.
    """
    slack = SUBMULT_SLACK if phi.provenance == Provenance.SYNTHETIC else SAMPLED_SUBMULT_SLACK
    ok, worst = check_submultiplicative(phi, slack=slack)
    estimate = replace(
        estimate_indices(phi),
        submultiplicative=ok,
        worst_ratio=worst,
        regularity=phi.regularity_bound(),
    )
    if not ok:
        logger.warning(f"Profile '{phi.label}' is not submultiplicative: worst ratio {worst:.6g}")
    if estimate.drift > NONCONVERGENCE_TOLERANCE:
        logger.warning(
            f"Index characterizations of '{phi.label}' disagree (widen the grid): "
            f"{estimate.describe()}"
        )
    if not estimate.ordered:
        logger.warning(f"Profile '{phi.label}' has alpha > beta: {estimate.describe()}")
    return estimate


class _MeanLogCache:
    """Portion averages of log w around one point, memoized by radius."""

    def __init__(self, w: "CompositeWeight", curve: CurvePath, t: complex):
        self.w = w
        self.curve = curve
        self.t = t
        self._cache: Dict[float, float] = {}

    def __call__(self, R: float) -> float:
        if R not in self._cache:
            if not R > 0.0:
                raise InvalidParameterError(f"Radius must be positive, got {R}")
            part = portion(self.curve, self.t, R)
            if part.measure <= 0.0:
                raise InvalidParameterError(f"Empty portion at radius {R:.3g}")
            floor = min(1e-10 * self.curve.length, 1e-6 * R)
            rule = portion_rule(self.curve, part, self.w.anchors, floor=floor)
            self._cache[R] = rule.integrate(self.w.log_evaluate(rule.points)) / rule.measure
        return self._cache[R]


def h_ratio(
    w: "CompositeWeight", curve: CurvePath, t: complex, R1: float, R2: float
) -> float:
    """H_{w,t}(R1, R2): ratio of geometric means of w over Γ(t,R1) and Γ(t,R2)."""
    if not (R1 > 0.0 and R2 > 0.0):
        raise InvalidParameterError(f"Radii must be positive, got {R1}, {R2}")
    if R1 == R2 or w.is_trivial:
        return 1.0
    mean_log = _MeanLogCache(w, curve, t)
    return float(np.exp(mean_log(R1) - mean_log(R2)))


def portion_r_grid(curve: CurvePath, t: complex) -> np.ndarray:
    """Log-spaced radii in [1e-6, 0.1]·d_t for measuring H over curve portions."""
    d_t = curve.diameter_from(t)
    return np.geomspace(V0_R_RANGE[0] * d_t, V0_R_RANGE[1] * d_t, V0_R_POINTS)


def _v0_values(
    mean_log: _MeanLogCache, xs: np.ndarray, r_grid: np.ndarray
) -> np.ndarray:
    tail = np.sort(r_grid)[: max(1, int(np.ceil(V0_TAIL_FRACTION * len(r_grid))))]
    out = np.empty(len(xs))
    for k, x in enumerate(xs):
        if x == 1.0:
            out[k] = 1.0
        elif x < 1.0:
            out[k] = np.exp(max(mean_log(x * R) - mean_log(R) for R in tail))
        else:
            # H(xR, R) with R = r/x keeps the larger radius on the grid.
            out[k] = np.exp(max(mean_log(r) - mean_log(r / x) for r in tail))
    return out


_LAGUERRE = laggauss(LAGUERRE_NODES)


def _ray_mean_log(log_rho: Callable[[np.ndarray], np.ndarray], log_r: np.ndarray) -> np.ndarray:
    """∫_0^1 log ρ(Rv) dv at R = exp(log_r), with v = e^-s and Gauss-Laguerre in s."""
    nodes, weights = _LAGUERRE
    return log_rho(log_r[:, None] - nodes[None, :]) @ weights


def _deep_v0_values(
    w: "CompositeWeight", curve: CurvePath, t: complex, xs: np.ndarray
) -> np.ndarray:
    # off-curve points raise here
    portion(curve, t, curve.mesh_width)
    log_rho = w.local_log_factor(t)
    out = np.ones(len(xs))
    if log_rho is None:
        return out
    log_r = np.log(curve.diameter_from(t)) - np.geomspace(*V0_DEEP_DEPTH, V0_DEEP_POINTS)
    base = _ray_mean_log(log_rho, log_r)
    for k, x in enumerate(xs):
        if x != 1.0:
            out[k] = np.exp((_ray_mean_log(log_rho, log_r + np.log(x)) - base).max())
    return out


def v0(
    w: "CompositeWeight",
    curve: CurvePath,
    t: complex,
    x: float,
    r_grid: Optional[Sequence[float]] = None,
) -> float:
    """(V⁰_t w)(x) = limsup_{R->0} H_{w,t}(xR, R) as a max over the small-R tail.

    Without ``r_grid`` the tail is the log-space ray limit; an explicit grid
    measures H by quadrature over the curve portions instead.
    """
    if not x > 0.0:
        raise InvalidParameterError(f"v0 needs x > 0, got {x}")
    if x == 1.0 or w.is_trivial:
        return 1.0
    if r_grid is None:
        return float(_deep_v0_values(w, curve, t, np.array([float(x)]))[0])
    grid = np.asarray(r_grid, dtype=float)
    return float(_v0_values(_MeanLogCache(w, curve, t), np.array([x]), grid)[0])


def v0_profile(
    w: "CompositeWeight",
    curve: CurvePath,
    t: complex,
    r_grid: Optional[Sequence[float]] = None,
) -> SubmultProfile:
    """V⁰_t w sampled at x = 2^j, |j| <= 20."""
    xs = 2.0 ** POWERLIKENESS_JS.astype(float)
    if w.is_trivial:
        values = np.ones(len(xs))
    elif r_grid is None:
        values = _deep_v0_values(w, curve, t, xs)
    else:
        grid = np.asarray(r_grid, dtype=float)
        values = _v0_values(_MeanLogCache(w, curve, t), xs, grid)
    return SubmultProfile(x=xs, values=values, provenance=Provenance.V0, label=f"V0 at {t}")


def powerlikeness_indices(
    w: "CompositeWeight",
    curve: CurvePath,
    t: complex,
    r_grid: Optional[Sequence[float]] = None,
) -> IndexEstimate:
    """Indices of powerlikeness α(V⁰_t w), β(V⁰_t w)."""
    estimate = indices(v0_profile(w, curve, t, r_grid))
    logger.debug(f"Powerlikeness at {t}: {estimate.describe()}")
    return estimate
