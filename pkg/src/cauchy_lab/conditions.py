"""Muckenhoupt-type conditions and the index criteria for boundedness of S.

Suprema over all portions Γ(t,R) are estimated on a finite (t, R) grid that
is refined toward small scales in ``halvings`` steps. Every step halves the
smallest radius and the exclusion floor around the weight anchors; the
sequence of step maxima is what the verdict is read from.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import IO, List, Optional, Sequence, Tuple

import numpy as np

from cauchy_lab.core.errors import InvalidParameterError
from cauchy_lab.core.types import GridSpec, IndexPair, Verdict
from cauchy_lab.exponent import ExponentFunction
from cauchy_lab.geometry import CurvePath, portion
from cauchy_lab.quadrature import portion_rule, singular_arc_positions
from cauchy_lab.vlebesgue import luxemburg_from_samples
from cauchy_lab.weights import CompositeWeight, mo_indices

logger = logging.getLogger(__name__)


@dataclass
class ConditionReport:
    """Grid estimate of an A_p(·) or Hästö-Diening supremum."""

    kind: str
    constant_estimate: float
    per_scale_maxima: List[float]
    verdict: Verdict
    grid: GridSpec
    r_range: Tuple[float, float]
    t_count: int
    cells: List[Tuple[int, float, float]] = field(default_factory=list, repr=False)
    quasinorm_cells: int = 0

    @property
    def growth_factors(self) -> List[float]:
        s = self.per_scale_maxima
        return [b / a for a, b in zip(s, s[1:])]

    @property
    def is_finite(self) -> bool:
        return self.verdict == Verdict.FINITE

    def grid_description(self) -> str:
        return (
            f"t_count={self.t_count} R=[{self.r_range[0]:.6g}, {self.r_range[1]:.6g}] "
            f"{self.grid.describe()}"
        )

    def write_csv(self, stream: IO[str]):
        """`t_index,R,value` rows followed by `verdict,<verdict>,<estimate>`."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["t_index", "R", "value"])
        for t_index, R, value in self.cells:
            writer.writerow([t_index, f"{R:.17g}", f"{value:.17g}"])
        writer.writerow(["verdict", self.verdict.value, f"{self.constant_estimate:.17g}"])


def classify_growth(maxima: Sequence[float], grid: GridSpec) -> Verdict:
    """Read a verdict off the last two growth factors of the step maxima."""
    if len(maxima) < 3:
        return Verdict.INCONCLUSIVE
    g1, g2 = maxima[-2] / maxima[-3], maxima[-1] / maxima[-2]
    if g1 <= 1.0 + grid.finite_tolerance and g2 <= 1.0 + grid.finite_tolerance:
        return Verdict.FINITE
    if g1 * g2 >= grid.divergence_growth:
        return Verdict.DIVERGING
    return Verdict.INCONCLUSIVE


def t_grid(curve: CurvePath, w: CompositeWeight, grid: GridSpec) -> np.ndarray:
    """Anchors on the curve, endpoints of open curves, then seeded random nodes.

    Random nodes come from a fixed permutation, so a larger ``t_random``
    extends a smaller one.
    """
    points = [a for a in w.anchors if len(singular_arc_positions(curve, [a]))]
    if not curve.is_closed:
        points += [curve.nodes[0], curve.nodes[-1]]
    rng = np.random.default_rng(grid.seed)
    order = rng.permutation(curve.node_count)[: grid.t_random]
    points += list(curve.nodes[order])
    unique: List[complex] = []
    for z in points:
        if all(abs(z - u) > 1e-14 for u in unique):
            unique.append(complex(z))
    return np.array(unique)


class _PortionSampler:
    """Quadrature samples of w, p over Γ(t,R) with anchor exclusion."""

    def __init__(self, curve: CurvePath, p: ExponentFunction, w: CompositeWeight):
        self.curve = curve
        self.p = p
        self.w = w
        self.singular = (not w.is_trivial) and len(singular_arc_positions(curve, w.anchors)) > 0

    def __call__(self, t: complex, R: float, exclusion: float):
        part = portion(self.curve, t, R)
        floor = min(1e-10 * self.curve.length, 1e-6 * R)
        if self.singular:
            floor = min(floor, 0.5 * exclusion)
        rule = portion_rule(
            self.curve, part, self.w.anchors, floor=floor,
            exclude_radius=exclusion if self.singular else 0.0,
        )
        exponents = self.p.at_arc(rule.arc)
        log_w = self.w.log_evaluate(rule.points)
        return rule.weights, exponents, log_w


def _ap_value(weights, p, log_w, R: float) -> Tuple[float, bool]:
    q = p / (p - 1.0)
    left = luxemburg_from_samples(np.exp(log_w), p, weights)
    right = luxemburg_from_samples(np.exp(-log_w), q, weights)
    return left * right / R, False


def _hd_value(weights, p, log_w, R: float) -> Tuple[float, bool]:
    q = p / (p - 1.0)
    measure = weights.sum()
    p_mean = measure / np.dot(weights, 1.0 / p)
    integral = float(np.dot(weights, np.exp(p * log_w)))
    ratio = q / p
    norm = luxemburg_from_samples(np.exp(-p * log_w), ratio, weights)
    return R ** (-p_mean) * integral * norm, bool(ratio.min() < 1.0)


def _supremum(
    kind: str, value_fn, curve: CurvePath, p: ExponentFunction, w: CompositeWeight, grid: GridSpec
) -> ConditionReport:
    sampler = _PortionSampler(curve, p, w)
    centres = t_grid(curve, w, grid)
    r_min = grid.r_min if grid.r_min is not None else 4.0 * curve.mesh_width
    logger.info(f"{kind} supremum over {len(centres)} centres, {grid.describe()}")

    cache = {}
    maxima: List[float] = []
    cells: List[Tuple[int, float, float]] = []
    quasinorm = 0
    r_max = r_min
    for step in range(grid.halvings + 1):
        exclusion = grid.floor_ratio * r_min * 0.5**step if sampler.singular else 0.0
        cells = []
        best = 0.0
        for i, t in enumerate(centres):
            d_t = curve.diameter_from(t)
            r_max = max(r_max, d_t)
            base = np.geomspace(r_min, d_t, grid.r_count) if r_min < d_t else np.array([d_t])
            finer = r_min * 0.5 ** np.arange(1, step + 1)
            for R in np.concatenate((finer[::-1], base)):
                key = (i, float(R), exclusion)
                if key not in cache:
                    weights, exponents, log_w = sampler(t, R, exclusion)
                    cache[key] = value_fn(weights, exponents, log_w, R)
                value, flagged = cache[key]
                quasinorm += int(flagged and step == grid.halvings)
                cells.append((i, float(R), value))
                best = max(best, value)
        maxima.append(best)
        logger.debug(f"{kind} step {step}: exclusion={exclusion:.3g} max={best:.6g}")

    maxima = list(np.maximum.accumulate(maxima))
    verdict = classify_growth(maxima, grid)
    report = ConditionReport(
        kind=kind,
        constant_estimate=maxima[-1],
        per_scale_maxima=maxima,
        verdict=verdict,
        grid=grid,
        r_range=(r_min * 0.5**grid.halvings, r_max),
        t_count=len(centres),
        cells=cells,
        quasinorm_cells=quasinorm,
    )
    if quasinorm:
        logger.warning(f"{kind}: {quasinorm} cells with q/p < 1 (quasinorm regime)")
    log = logger.warning if verdict == Verdict.DIVERGING else logger.info
    growth = ", ".join(f"{g:.3f}" for g in report.growth_factors)
    log(f"{kind} verdict {verdict.value}: estimate {maxima[-1]:.6g}, growth [{growth}]")
    return report


def ap_constant(
    curve: CurvePath,
    p: ExponentFunction,
    w: CompositeWeight,
    grid: Optional[GridSpec] = None,
) -> ConditionReport:
    """sup (1/R) ‖w χ_Γ(t,R)‖_p(·) ‖w⁻¹ χ_Γ(t,R)‖_q(·) over the grid."""
    return _supremum("A_p", _ap_value, curve, p, w, grid or GridSpec())


def hd_constant(
    curve: CurvePath,
    p: ExponentFunction,
    w: CompositeWeight,
    grid: Optional[GridSpec] = None,
) -> ConditionReport:
    """sup R^(-p_Γ(t,R)) ∫ w^p · ‖w^(-p) χ‖_(q/p) over the grid.

    p_Γ(t,R) is the harmonic mean of p over the portion. Where q/p < 1 the
    same Luxemburg functional is computed and the cell is counted in
    ``quasinorm_cells``.
    """
    return _supremum("HD", _hd_value, curve, p, w, grid or GridSpec())


@dataclass
class KssResult:
    satisfied: bool
    margins: List[Tuple[float, float]]
    dini_modulus: Optional[float]
    indices: List[IndexPair]

    @property
    def flat_margins(self) -> List[float]:
        return [m for pair in self.margins for m in pair]


def _factor_terms(p: ExponentFunction, w: CompositeWeight) -> List[Tuple[float, IndexPair]]:
    return [(1.0 / p.at(anchor), mo_indices(factor)) for anchor, factor in w.factors]


def kss_sufficient(
    p: ExponentFunction,
    w: CompositeWeight,
    dini_modulus: Optional[float] = None,
    carleson_verdict: bool = True,
) -> KssResult:
    """Margins (1/p(t_k) + m(w_k), 1 - 1/p(t_k) - M(w_k)) for every factor.

    Satisfied when every margin is positive and the curve is Carleson. The
    Dini-Lipschitz modulus is carried along but not gated on.
    """
    terms = _factor_terms(p, w)
    margins = [(inv + idx.lower, 1.0 - inv - idx.upper) for inv, idx in terms]
    satisfied = carleson_verdict and all(m > 0.0 for pair in margins for m in pair)
    logger.debug(f"KSS margins {margins} -> {'satisfied' if satisfied else 'not satisfied'}")
    return KssResult(satisfied, margins, dini_modulus, [idx for _, idx in terms])


@dataclass
class NecessaryResult:
    holds_nonstrict: bool
    holds_strict: bool
    margins: List[Tuple[float, float]]
    epsilon0: float
    sweep: List[Tuple[float, List[Tuple[float, float]]]]


def _scaled_margins(
    terms: List[Tuple[float, IndexPair]], epsilon: float
) -> List[Tuple[float, float]]:
    s = 1.0 + epsilon
    return [(inv + s * idx.lower, 1.0 - inv - s * idx.upper) for inv, idx in terms]


def _epsilon0(terms: List[Tuple[float, IndexPair]]) -> float:
    """Largest ε₀ with all margins of w^(1+ε) nonnegative for |ε| < ε₀.

    Each margin is a + (1+ε) b; it closes at ε = -a/b - 1.
    """
    bound = np.inf
    for inv, idx in terms:
        for a, b in ((inv, idx.lower), (1.0 - inv, -idx.upper)):
            if a + b < 0.0:
                return 0.0
            if b != 0.0:
                bound = min(bound, abs(-a / b - 1.0))
    return float(bound)


def necessary_check(
    p: ExponentFunction,
    w: CompositeWeight,
    epsilons: Optional[Sequence[float]] = None,
) -> NecessaryResult:
    """Non-strict and strict index conditions plus the ε-stability sweep.

    The sweep uses m(w^(1+ε)) = (1+ε) m(w), so margins are affine in ε.
    """
    terms = _factor_terms(p, w)
    margins = _scaled_margins(terms, 0.0)
    nonstrict = all(m >= 0.0 for pair in margins for m in pair)
    strict = all(m > 0.0 for pair in margins for m in pair)
    eps0 = _epsilon0(terms)
    grid = np.linspace(-1.0, 1.0, 21) if epsilons is None else np.asarray(epsilons, dtype=float)
    sweep = [(float(e), _scaled_margins(terms, float(e))) for e in grid]
    logger.debug(f"Necessary check: nonstrict={nonstrict} strict={strict} eps0={eps0:g}")
    return NecessaryResult(nonstrict, strict, margins, eps0, sweep)


def standard_lp_criterion(p: ExponentFunction, w: CompositeWeight) -> bool:
    """Strict index condition at every anchor, for constant p.

    With p constant, S is bounded on L^p(Γ, w) exactly when 0 < 1/p + m and
    1/p + M < 1 hold at every anchor.
    """
    if not p.is_constant:
        raise InvalidParameterError("standard_lp_criterion needs a constant exponent")
    return necessary_check(p, w, epsilons=[0.0]).holds_strict
