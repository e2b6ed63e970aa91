"""Gauss-Legendre rules on curve arcs, graded toward singular points."""

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from cauchy_lab.geometry import CurvePath, CurvePortion

GAUSS_ORDER = 4


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points on the curve with arc-length weights."""

    points: np.ndarray
    arc: np.ndarray
    weights: np.ndarray

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def singular_arc_positions(curve: CurvePath, anchors: Iterable[complex]) -> np.ndarray:
    """Arc positions of the anchors that lie on the curve.

    On closed curves each position is repeated one length to either side so
    that arcs near the parameter seam see it.
    """
    positions = []
    for anchor in anchors:
        s, dist = curve.locate(anchor)
        if dist <= curve.node_tolerance:
            positions.append(s)
            if curve.is_closed:
                positions.extend((s - curve.length, s + curve.length))
    return np.array(positions, dtype=float)


def graded_rule(
    curve: CurvePath,
    arcs: np.ndarray,
    singular_arcs: Optional[np.ndarray] = None,
    floor: Optional[float] = None,
    order: int = GAUSS_ORDER,
    excluded_arcs: Optional[np.ndarray] = None,
    exclude_radius: float = 0.0,
) -> QuadratureRule:
    """Composite Gauss rule over arc-length intervals.

    Breakpoints are the interval ends, every polyline vertex inside, and
    around each singular arc position the dyadic points s ± ℓ·2^-j down to
    ``floor`` (default 1e-10·|Γ|), where ℓ is the interval length. Arc within
    ``exclude_radius`` of a position in ``excluded_arcs`` is left out.
    """
    floor = 1e-10 * curve.length if floor is None else floor
    singular = np.empty(0) if singular_arcs is None else np.asarray(singular_arcs, dtype=float)
    excluded = np.empty(0) if excluded_arcs is None else np.asarray(excluded_arcs, dtype=float)
    singular = np.concatenate((singular, excluded))
    if exclude_radius <= 0.0:
        excluded = np.empty(0)
    nodes, gauss_weights = leggauss(order)

    all_arc, all_weights = [], []
    for a, b in np.asarray(arcs, dtype=float).reshape(-1, 2):
        if b <= a:
            continue
        span = b - a
        inner = curve.cumulative_lengths
        pieces = [np.array([a, b]), inner[(inner > a) & (inner < b)]]
        levels = max(1, int(np.ceil(np.log2(span / floor)))) if span > floor else 1
        offsets = span * 0.5 ** np.arange(1, levels + 1)
        for s in singular[(singular >= a - span) & (singular <= b + span)]:
            pieces.append(np.concatenate(([s], s - offsets, s + offsets)))
        for s in excluded:
            pieces.append(np.array([s - exclude_radius, s + exclude_radius]))

        breaks = np.unique(np.concatenate(pieces))
        breaks = breaks[(breaks >= a) & (breaks <= b)]
        left, right = breaks[:-1], breaks[1:]
        if len(excluded):
            centre = 0.5 * (left + right)
            gap = np.abs(centre[:, None] - excluded[None, :]).min(axis=1)
            keep = gap >= exclude_radius
            left, right = left[keep], right[keep]

        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        all_arc.append((mid[:, None] + half[:, None] * nodes[None, :]).ravel())
        all_weights.append((half[:, None] * gauss_weights[None, :]).ravel())

    arc = np.concatenate(all_arc) if all_arc else np.empty(0)
    weights = np.concatenate(all_weights) if all_weights else np.empty(0)
    points = np.asarray(curve.point_at_arc(arc), dtype=complex).reshape(-1)
    return QuadratureRule(points=points, arc=arc, weights=weights)


def portion_rule(
    curve: CurvePath,
    part: CurvePortion,
    anchors: Iterable[complex] = (),
    floor: Optional[float] = None,
    exclude_radius: float = 0.0,
) -> QuadratureRule:
    """Graded rule over Γ(t,R), refined toward ``t`` and every anchor on the curve.

    ``exclude_radius`` cuts arc around the anchors only, never around ``t``.
    """
    return graded_rule(
        curve,
        part.arcs,
        singular_arc_positions(curve, [part.center]),
        floor=floor,
        excluded_arcs=singular_arc_positions(curve, anchors),
        exclude_radius=exclude_radius,
    )
