"""Rectifiable plane curves stored as arc-length polylines.

Curves are immutable after construction. Every integral over a curve becomes
a sum over polyline segments, which treats analytic curves and the
oscillating spiral example the same way.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from cauchy_lab.core.errors import (
    InvalidGeometryError,
    InvalidParameterError,
    NotRectifiableError,
    PointNotOnCurveError,
)

logger = logging.getLogger(__name__)

# Nodes per oscillation of sin(1/x) in the spiral example.
SPIRAL_NODES_PER_OSCILLATION = 16

# Largest x-step allowed on the slowly oscillating part of the spiral.
SPIRAL_MAX_STEP = 1.0 / 64.0


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values)
    values.flags.writeable = False
    return values


@dataclass(frozen=True, eq=False)
class CurvePath:
    """Simple rectifiable curve as a polyline parametrized by arc length.

    For closed (Jordan) curves the first vertex is repeated at the end of
    ``vertices`` so that every segment, including the closing one, is explicit.
    """

    vertices: np.ndarray
    cumulative_lengths: np.ndarray
    is_closed: bool = False
    label: str = "polyline"

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(np.asarray(self.vertices, dtype=complex)))
        object.__setattr__(
            self, "cumulative_lengths", _frozen(np.asarray(self.cumulative_lengths, dtype=float))
        )

    @property
    def node_count(self) -> int:
        return len(self.vertices) - (1 if self.is_closed else 0)

    @property
    def nodes(self) -> np.ndarray:
        return self.vertices[: self.node_count]

    @property
    def node_arc(self) -> np.ndarray:
        """Arc-length position of every node."""
        return self.cumulative_lengths[: self.node_count]

    @property
    def length(self) -> float:
        return float(self.cumulative_lengths[-1])

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.cumulative_lengths)

    @property
    def mesh_width(self) -> float:
        return float(self.segment_lengths.max())

    @property
    def node_tolerance(self) -> float:
        """Distance within which a point counts as lying on the curve."""
        return 1e-9 * max(1.0, self.length) + 0.125 * self.mesh_width**2

    def parametrization(self, s: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
        """Map a parameter in [0, 1] to a point, linearly in arc length."""
        return self.point_at_arc(np.asarray(s, dtype=float) * self.length)

    def point_at_arc(self, s: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
        """Point at arc-length position ``s`` (taken modulo the length on closed curves)."""
        s = np.asarray(s, dtype=float)
        if self.is_closed:
            s = np.mod(s, self.length)
        s = np.clip(s, 0.0, self.length)
        idx = np.clip(
            np.searchsorted(self.cumulative_lengths, s, side="right") - 1,
            0,
            len(self.vertices) - 2,
        )
        seg = self.segment_lengths[idx]
        u = (s - self.cumulative_lengths[idx]) / seg
        points = self.vertices[idx] + u * (self.vertices[idx + 1] - self.vertices[idx])
        return points if points.ndim else complex(points)

    def node_tangents(self) -> np.ndarray:
        """Unit tangents at the nodes from central differences."""
        z = self.nodes
        if self.is_closed:
            forward = np.roll(z, -1) - np.roll(z, 1)
        else:
            forward = np.empty_like(z)
            forward[1:-1] = z[2:] - z[:-2]
            forward[0] = z[1] - z[0]
            forward[-1] = z[-1] - z[-2]
        return forward / np.abs(forward)

    def node_cells(self) -> np.ndarray:
        """Trapezoidal arc measure attached to each node; sums to the length."""
        seg = self.segment_lengths
        if self.is_closed:
            return 0.5 * (seg + np.roll(seg, 1))
        cells = np.zeros(self.node_count)
        cells[:-1] += 0.5 * seg
        cells[1:] += 0.5 * seg
        return cells

    def local_mesh_width(self, index: int) -> float:
        seg = self.segment_lengths
        if self.is_closed:
            return float(max(seg[index % len(seg)], seg[(index - 1) % len(seg)]))
        left = seg[index - 1] if index > 0 else 0.0
        right = seg[index] if index < len(seg) else 0.0
        return float(max(left, right))

    def locate(self, t: complex) -> Tuple[float, float]:
        """Return (arc position, distance) of the polyline point closest to ``t``."""
        a = self.vertices[:-1]
        d = self.vertices[1:] - a
        u = np.clip(((t - a) * np.conj(d)).real / (np.abs(d) ** 2), 0.0, 1.0)
        dist = np.abs(a + u * d - t)
        i = int(np.argmin(dist))
        return float(self.cumulative_lengths[i] + u[i] * self.segment_lengths[i]), float(dist[i])

    def require_on_curve(self, t: complex) -> float:
        """Arc position of ``t``; raises when ``t`` is not on the curve."""
        s, dist = self.locate(t)
        if dist > self.node_tolerance:
            raise PointNotOnCurveError(
                f"Point {t} is {dist:.3g} away from curve '{self.label}' "
                f"(tolerance {self.node_tolerance:.3g})"
            )
        return s

    def diameter_from(self, t: complex) -> float:
        """d_t: the largest distance from ``t`` to a node."""
        return float(np.abs(self.nodes - t).max())

    def resample(self, count: int) -> "CurvePath":
        """Equispaced (in arc length) resampling with ``count`` nodes."""
        if self.is_closed:
            s = self.length * np.arange(count) / count
        else:
            s = np.linspace(0.0, self.length, count)
        return build_polyline(self.point_at_arc(s), closed=self.is_closed, label=self.label)


@dataclass(frozen=True, eq=False)
class CurvePortion:
    """Γ(t,R): the part of the curve inside the open disk |z - t| < R."""

    center: complex
    radius: float
    arcs: np.ndarray = field(repr=False)
    measure: float
    curve_length: float = field(repr=False)

    @property
    def member_arcs(self) -> List[Tuple[float, float]]:
        """Maximal parameter subintervals of [0, 1] lying in the disk."""
        return [(a / self.curve_length, b / self.curve_length) for a, b in self.arcs]


def build_polyline(
    points: Sequence[complex], closed: bool = False, label: str = "polyline"
) -> CurvePath:
    """Build an arc-length polyline through ``points``."""
    z = np.asarray(points, dtype=complex).ravel()
    if closed and len(z) > 1 and z[-1] == z[0]:
        z = z[:-1]
    minimum = 3 if closed else 2
    if len(z) < minimum:
        raise InvalidGeometryError(f"Need at least {minimum} points, got {len(z)}")
    if not np.all(np.isfinite(z)):
        raise InvalidGeometryError("Curve points must be finite")

    vertices = np.append(z, z[0]) if closed else z
    seg = np.abs(np.diff(vertices))
    if np.any(seg == 0.0):
        bad = int(np.flatnonzero(seg == 0.0)[0])
        raise InvalidGeometryError(f"Duplicate consecutive points at index {bad}")

    cumulative = np.concatenate(([0.0], np.cumsum(seg)))
    return CurvePath(
        vertices=vertices, cumulative_lengths=cumulative, is_closed=closed, label=label
    )


def segment(start: complex = 0.0, end: complex = 1.0, nodes: int = 2) -> CurvePath:
    """Straight segment sampled at ``nodes`` equispaced points."""
    return build_polyline(
        np.linspace(complex(start), complex(end), nodes), closed=False, label="segment"
    )


def circle(center: complex = 0.0, radius: float = 1.0, nodes: int = 1024) -> CurvePath:
    """Counter-clockwise circle sampled at ``nodes`` equispaced points."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    return build_polyline(center + radius * np.exp(1j * theta), closed=True, label="circle")


def spiral_example(alpha: float, resolution: int = 1024) -> CurvePath:
    """The curve {0} ∪ {x + i x^alpha sin(1/x) : 0 < x <= 1}.

    The oscillating part is sampled uniformly in 1/x, i.e. with a fixed
    number of nodes per oscillation of sin(1/x), so cells shrink like x^2
    toward the accumulation point. The slowly varying part near x = 1 is
    sampled uniformly in x with step SPIRAL_MAX_STEP. The point 0 closes
    the polyline as its last node.
    """
    if alpha <= 1.0:
        raise NotRectifiableError(f"Spiral with alpha={alpha} is not rectifiable (need alpha > 1)")
    if resolution < 64:
        raise InvalidParameterError(f"Spiral resolution must be >= 64, got {resolution}")

    du = 2.0 * np.pi / SPIRAL_NODES_PER_OSCILLATION
    x_switch = min(1.0, np.sqrt(SPIRAL_MAX_STEP / du))
    coarse = int(np.ceil((1.0 - x_switch) / SPIRAL_MAX_STEP))
    x_coarse = np.linspace(1.0, x_switch, coarse + 1)[:-1] if coarse > 0 else np.empty(0)
    u = 1.0 / x_switch + du * np.arange(resolution)
    x = np.concatenate((x_coarse, 1.0 / u))

    points = x + 1j * x**alpha * np.sin(1.0 / x)
    curve = build_polyline(np.append(points, 0.0), closed=False, label=f"spiral(alpha={alpha:g})")
    logger.debug(
        f"Spiral alpha={alpha:g}: {curve.node_count} nodes, x_min={x[-1]:.3e}, "
        f"length={curve.length:.6f}"
    )
    return curve


def _disk_intervals(
    curve: CurvePath, t: complex, radii: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Per segment, the parameter interval [u1, u2] ⊂ [0, 1] inside each disk.

    The disk ∩ segment is convex, so it is a single (possibly empty)
    sub-segment; its ends solve a quadratic in the segment parameter.
    Returned arrays have shape (len(radii), segments).
    """
    a = curve.vertices[:-1] - t
    d = curve.vertices[1:] - curve.vertices[:-1]
    qa = np.abs(d) ** 2
    qb = (a * np.conj(d)).real
    qc = np.abs(a) ** 2

    r2 = np.asarray(radii, dtype=float)[:, None] ** 2
    disc = qb**2 - qa * (qc - r2)
    root = np.sqrt(np.maximum(disc, 0.0))
    u1 = np.clip((-qb - root) / qa, 0.0, 1.0)
    u2 = np.clip((-qb + root) / qa, 0.0, 1.0)
    empty = disc <= 0.0
    u1 = np.where(empty, 0.0, u1)
    u2 = np.where(empty, 0.0, u2)
    return u1, u2


def portion_measures(curve: CurvePath, t: complex, radii: Sequence[float]) -> np.ndarray:
    """|Γ(t,R)| for every radius in ``radii``."""
    u1, u2 = _disk_intervals(curve, t, np.atleast_1d(radii))
    return ((u2 - u1) * curve.segment_lengths).sum(axis=1)


def portion(curve: CurvePath, t: complex, R: float) -> CurvePortion:
    """Γ(t,R) with its maximal member arcs and total arc measure."""
    if not R > 0.0:
        raise InvalidParameterError(f"Portion radius must be positive, got {R}")
    curve.require_on_curve(t)

    u1, u2 = _disk_intervals(curve, t, np.array([R]))
    u1, u2 = u1[0], u2[0]
    start = curve.cumulative_lengths[:-1] + u1 * curve.segment_lengths
    stop = curve.cumulative_lengths[:-1] + u2 * curve.segment_lengths
    keep = stop > start

    arcs: List[List[float]] = []
    joint = 1e-13 * max(1.0, curve.length)
    for a, b in zip(start[keep], stop[keep]):
        if arcs and a - arcs[-1][1] <= joint:
            arcs[-1][1] = b
        else:
            arcs.append([a, b])

    arc_array = np.array(arcs, dtype=float).reshape(-1, 2)
    measure = float((arc_array[:, 1] - arc_array[:, 0]).sum())
    return CurvePortion(
        center=complex(t), radius=float(R), arcs=arc_array, measure=measure,
        curve_length=curve.length,
    )


def carleson_constant(
    curve: CurvePath,
    t_samples: int = 64,
    r_samples: int = 48,
    r_min: Optional[float] = None,
) -> float:
    """Grid estimate of sup_t sup_R |Γ(t,R)|/R.

    Centers run over an even subsample of nodes (endpoints included); radii
    are log-spaced from ``r_min`` (default four local mesh widths, below
    which the ratio is discretization noise) up to d_t.
    """
    if t_samples < 8 or r_samples < 8:
        raise InvalidParameterError("carleson_constant needs at least 8 samples per axis")

    indices = np.unique(np.round(np.linspace(0, curve.node_count - 1, t_samples)).astype(int))
    best = 0.0
    for i in indices:
        t = curve.nodes[i]
        d_t = curve.diameter_from(t)
        lower = r_min if r_min is not None else 4.0 * curve.local_mesh_width(int(i))
        radii = np.array([d_t]) if lower >= d_t else np.geomspace(lower, d_t, r_samples)
        ratios = portion_measures(curve, t, radii) / radii
        best = max(best, float(ratios.max()))
    logger.debug(f"Carleson constant of '{curve.label}': {best:.6f}")
    return best


def carleson_verdict(
    curve_factory: Callable[[int], CurvePath],
    resolutions: Sequence[int],
    drift_tolerance: float = 0.05,
    **kwargs,
) -> Tuple[List[float], bool]:
    """Carleson constants along a refinement sequence and whether they are stable.

    Stable means every consecutive relative change stays below
    ``drift_tolerance``.
    """
    constants = [carleson_constant(curve_factory(n), **kwargs) for n in resolutions]
    growth = [b / a for a, b in zip(constants, constants[1:])]
    stable = all(abs(g - 1.0) < drift_tolerance for g in growth)
    logger.info(
        f"Carleson refinement {list(resolutions)}: "
        f"{', '.join(f'{c:.4f}' for c in constants)} -> {'stable' if stable else 'drifting'}"
    )
    return constants, stable


def write_curve(curve: CurvePath, path: Path):
    """Write nodes as `x y` lines under a `closed 0|1` header."""
    lines = [f"closed {1 if curve.is_closed else 0}"]
    lines += [f"{z.real:.17g} {z.imag:.17g}" for z in curve.nodes]
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve(path: Path, label: Optional[str] = None) -> CurvePath:
    """Read a curve written by :func:`write_curve`."""
    text = Path(path).read_text().splitlines()
    rows = [line.split() for line in text if line.strip() and not line.lstrip().startswith("#")]
    if not rows or rows[0][0] != "closed" or len(rows[0]) != 2 or rows[0][1] not in ("0", "1"):
        raise InvalidGeometryError(f"{path}: first line must be 'closed 0' or 'closed 1'")
    try:
        points = [complex(float(x), float(y)) for x, y in rows[1:]]
    except ValueError as e:
        raise InvalidGeometryError(f"{path}: malformed coordinate line ({e})") from e
    return build_polyline(points, closed=rows[0][1] == "1", label=label or Path(path).stem)
