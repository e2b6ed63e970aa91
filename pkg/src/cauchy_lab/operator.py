"""Discretized Cauchy singular integral operator and weighted norm estimates.

(Sf)(t) = (1/πi) PV ∫_Γ f(τ) dτ / (τ - t)

Closed curves use the alternating rule: target node i only sees source
nodes at odd offsets, each with twice its cell, so no self-cell exists.
Open curves use the punctured trapezoid rule with a curvature term on the
diagonal, which is the principal value over the symmetric self-cell.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse.linalg import svds

from cauchy_lab.core.errors import (
    DegenerateStencilError,
    DimensionMismatchError,
    InvalidParameterError,
)
from cauchy_lab.core.types import ProbeVerdict
from cauchy_lab.exponent import ExponentFunction
from cauchy_lab.geometry import CurvePath
from cauchy_lab.vlebesgue import SampledFunction, luxemburg_from_samples
from cauchy_lab.weights import CompositeWeight

logger = logging.getLogger(__name__)

MIN_NODES = 32
BLOWUP_GROWTH = 1.1
BOUNDED_GROWTH = 1.05
# Settling sequences: successive log growths shrink by this ratio or more,
# and the projected further growth stays below the limit.
SETTLING_RATIO = 0.9
SETTLING_LIMIT = 2.0

ExponentSource = Union[float, ExponentFunction, Callable[[CurvePath], ExponentFunction]]


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """Dense matrix of S on the nodes of ``curve``."""

    matrix: np.ndarray
    curve: CurvePath
    quadrature_kind: str
    mesh_width: float
    quadrature_weights: np.ndarray
    row_weight_sums: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _signed_curvature(z: np.ndarray) -> np.ndarray:
    """Curvature of the circle through each interior node and its neighbours."""
    a, b, c = z[:-2], z[1:-1], z[2:]
    cross = (np.conj(b - a) * (c - b)).imag
    kappa = np.zeros(len(z))
    kappa[1:-1] = 2.0 * cross / (np.abs(b - a) * np.abs(c - b) * np.abs(c - a))
    return kappa


def discretize(curve: CurvePath, nodes: Optional[int] = None) -> DiscretizedOperator:
    """Build the principal-value matrix of S with ``nodes`` equispaced nodes."""
    count = curve.node_count if nodes is None else nodes
    if count < MIN_NODES:
        raise DegenerateStencilError(f"Need at least {MIN_NODES} nodes, got {count}")
    if curve.is_closed and count % 2:
        count += 1
        logger.debug(f"Alternating rule needs an even node count; using {count}")
    if count != curve.node_count:
        curve = curve.resample(count)

    z = curve.nodes
    cells = curve.node_cells()
    dtau = curve.node_tangents() * cells
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    kernel = dtau[None, :] / diff / (np.pi * 1j)

    if curve.is_closed:
        offsets = np.subtract.outer(np.arange(count), np.arange(count))
        mask = (offsets % 2) == 1
        matrix = np.where(mask, 2.0 * kernel, 0.0)
        weights = 2.0 * cells
        row_sums = (mask * weights[None, :]).sum(axis=1)
        kind = "pv-alternating"
    else:
        matrix = kernel
        half = 0.5 * cells
        half[0] = half[-1] = 0.0
        np.fill_diagonal(matrix, _signed_curvature(z) * half / np.pi)
        matrix[0, 0] = matrix[-1, -1] = 0.0
        weights = cells
        row_sums = cells.sum() - cells
        kind = "pv-symmetric-exclusion"

    logger.debug(f"Discretized S on '{curve.label}' with {count} nodes ({kind})")
    return DiscretizedOperator(
        matrix=matrix,
        curve=curve,
        quadrature_kind=kind,
        mesh_width=curve.mesh_width,
        quadrature_weights=weights,
        row_weight_sums=row_sums,
    )


def apply(S: DiscretizedOperator, f: SampledFunction) -> SampledFunction:
    """Sf at the nodes."""
    if len(f.values) != S.size:
        raise DimensionMismatchError(
            f"Operator of size {S.size} applied to {len(f.values)} values"
        )
    return SampledFunction(S.curve, S.matrix @ f.values)


def resolve_exponent(p: ExponentSource, curve: CurvePath) -> ExponentFunction:
    """An exponent on ``curve`` from a constant, a factory or a matching function."""
    if isinstance(p, ExponentFunction):
        if p.curve.node_count != curve.node_count:
            raise DimensionMismatchError("Exponent nodes do not match the operator nodes")
        return p
    if callable(p):
        return p(curve)
    return ExponentFunction.constant(curve, float(p))


def _structured_candidates(
    curve: CurvePath, w: CompositeWeight, p: ExponentFunction, levels: int = 8
) -> List[np.ndarray]:
    """Indicators and power bumps |τ - t_k|^(δ - 1/p(t_k)) at dyadic scales."""
    z = curve.nodes
    candidates = []
    for anchor in w.anchors:
        dist = np.abs(z - anchor)
        nearest = int(np.argmin(dist))
        if dist[nearest] > 4.0 * curve.mesh_width:
            continue
        floor = np.partition(dist, 1)[1] if dist[nearest] == 0.0 else dist[nearest]
        exponent = 0.05 - 1.0 / p.values[nearest]
        bump = np.maximum(dist, floor) ** exponent
        for k in range(1, levels + 1):
            inside = dist < curve.length * 0.5**k
            if inside.sum() < 2:
                break
            candidates.append(inside.astype(complex))
            candidates.append(np.where(inside, bump, 0.0).astype(complex))
    return candidates


def _svd_candidate(S: DiscretizedOperator, scale: np.ndarray) -> np.ndarray:
    """Top right singular vector of S in the weighted ℓ² norm."""
    M = (scale[:, None] * S.matrix) / scale[None, :]
    _, _, vh = svds(M, k=1, v0=np.ones(S.size, dtype=M.dtype))
    return np.conj(vh[0]) / scale


def weighted_opnorm(
    S: DiscretizedOperator,
    w: CompositeWeight,
    p: ExponentSource,
    trials: int = 64,
    seed: int = 0,
    ascent_starts: int = 3,
    ascent_coordinates: int = 32,
    max_sweeps: int = 10,
) -> float:
    """Lower bound for ‖S‖ on L^p(·)(Γ, w).

    Candidates are seeded complex Gaussians, structured functions near the
    anchors and the weighted ℓ² top singular vector. The best few are then
    improved by coordinate ascent until a sweep gains less than 1e-4.
    """
    if trials < 50:
        raise InvalidParameterError(f"weighted_opnorm needs >= 50 trials, got {trials}")
    curve = S.curve
    exponent = resolve_exponent(p, curve)
    cells = curve.node_cells()
    w_nodes = w.nodal_values(curve)
    p_nodes = exponent.values

    def norm(v: np.ndarray) -> float:
        return luxemburg_from_samples(np.abs(v) * w_nodes, p_nodes, cells)

    def ratio(f: np.ndarray, image: np.ndarray) -> float:
        below = norm(f)
        return norm(image) / below if below > 0.0 else 0.0

    children = np.random.SeedSequence(seed).spawn(trials + 1)
    candidates = []
    for child in children[:trials]:
        rng = np.random.default_rng(child)
        candidates.append(rng.standard_normal(S.size) + 1j * rng.standard_normal(S.size))
    candidates += _structured_candidates(curve, w, exponent)
    candidates.append(_svd_candidate(S, w_nodes * np.sqrt(cells)))

    scored = [(ratio(f, S.matrix @ f), i) for i, f in enumerate(candidates)]
    scored.sort(key=lambda item: (-item[0], item[1]))
    best = scored[0][0]

    rng = np.random.default_rng(children[trials])
    moves = np.array([1.0, -1.0, 1j, -1j])
    for value, index in scored[:ascent_starts]:
        f = candidates[index].astype(complex)
        image = S.matrix @ f
        current = value
        for _ in range(max_sweeps):
            start = current
            coords = rng.choice(S.size, size=min(ascent_coordinates, S.size), replace=False)
            step = 0.5 * np.abs(f).mean()
            for j in coords:
                for move in moves:
                    delta = step * move
                    trial_f = f.copy()
                    trial_f[j] += delta
                    trial_image = image + delta * S.matrix[:, j]
                    candidate = ratio(trial_f, trial_image)
                    if candidate > current * (1.0 + 1e-12):
                        f, image, current = trial_f, trial_image, candidate
            if current - start < 1e-4 * start:
                break
        best = max(best, current)

    logger.debug(f"Weighted norm estimate on {S.size} nodes: {best:.6f}")
    return float(best)


def projected_growth(estimates: Sequence[float]) -> float:
    """Further growth if the per-step log growth keeps shrinking at its recent rate.

    The recent rate is the largest ratio of successive log growths over the
    last three steps. A power law h^-a keeps that ratio at 1, so anything
    above SETTLING_RATIO projects to infinity.
    """
    steps = np.diff(np.log(np.asarray(estimates, dtype=float)))[-3:]
    if len(steps) < 2 or np.any(steps[:-1] <= 0.0):
        return float("inf")
    rate = float((steps[1:] / steps[:-1]).max())
    if rate > SETTLING_RATIO:
        return float("inf")
    return float(np.exp(max(steps[-1], 0.0) * max(rate, 0.0) / (1.0 - rate)))


def classify_refinement(estimates: Sequence[float]) -> ProbeVerdict:
    """Blowup on sustained growth, bounded when growth is small or settling."""
    growth = [b / a for a, b in zip(estimates, estimates[1:])]
    if all(g >= BLOWUP_GROWTH for g in growth[-2:]):
        return ProbeVerdict.BLOWUP
    if all(g <= BOUNDED_GROWTH for g in growth):
        return ProbeVerdict.BOUNDED
    if growth[-1] < BLOWUP_GROWTH and projected_growth(estimates) <= SETTLING_LIMIT:
        return ProbeVerdict.BOUNDED
    return ProbeVerdict.INCONCLUSIVE


def refinement_probe(
    curve_family: Callable[[int], CurvePath],
    w: CompositeWeight,
    p: ExponentSource,
    mesh_sequence: Sequence[int],
    trials: int = 64,
    seed: int = 0,
) -> Tuple[List[float], ProbeVerdict]:
    """weighted_opnorm along a mesh sequence and the refinement verdict.

    Blowup when the last two growth factors reach BLOWUP_GROWTH. Bounded
    when every growth factor stays within BOUNDED_GROWTH, or when the growth
    decelerates geometrically (see ``projected_growth``).
    """
    meshes = list(mesh_sequence)
    if len(meshes) < 3 or any(b <= a for a, b in zip(meshes, meshes[1:])):
        raise InvalidParameterError(
            f"mesh_sequence must be strictly increasing with >= 3 entries: {meshes}"
        )

    estimates = []
    for n in meshes:
        S = discretize(curve_family(n), n)
        estimates.append(weighted_opnorm(S, w, p, trials=trials, seed=seed))
    verdict = classify_refinement(estimates)
    logger.info(
        f"Refinement probe {meshes}: {', '.join(f'{e:.4f}' for e in estimates)} -> {verdict.value}"
    )
    return estimates, verdict
