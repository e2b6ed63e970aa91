#!/usr/bin/env python3
"""
Test the discretized Cauchy singular integral and its weighted norm estimates.

Oracles:
1. Closed curves: S1 = 1 and S reproduces boundary values of analytic functions
2. Segment [-1,1]: (S1)(t) = (1/πi) log((1-t)/(1+t))
3. Circle in L^2: S is unitary, so the norm is 1 and S² = I
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest

from cauchy_lab.core.errors import (
    DegenerateStencilError,
    DimensionMismatchError,
    InvalidParameterError,
)
from cauchy_lab.core.types import ProbeVerdict
from cauchy_lab.exponent import ExponentFunction
from cauchy_lab.geometry import circle, segment
from cauchy_lab.operator import (
    BOUNDED_GROWTH,
    apply,
    classify_refinement,
    discretize,
    projected_growth,
    refinement_probe,
    resolve_exponent,
    weighted_opnorm,
)
from cauchy_lab.vlebesgue import SampledFunction
from cauchy_lab.weights import CompositeWeight, khvedelidze_weight


@pytest.fixture(scope="module")
def circle_operator():
    return discretize(circle(0.0, 1.0, 1024))


def test_circle_reproduces_constants(circle_operator):
    S = circle_operator
    assert S.quadrature_kind == "pv-alternating"
    result = apply(S, SampledFunction.constant(S.curve))
    assert np.abs(result.values - 1.0).max() < 1e-3


def test_circle_reproduces_analytic_boundary_values(circle_operator):
    S = circle_operator
    f = SampledFunction.from_function(S.curve, lambda z: z)
    assert np.abs(apply(S, f).values - f.values).max() < 1e-3


def test_circle_square_is_identity(circle_operator):
    S = circle_operator
    defect = S.matrix @ S.matrix - np.eye(S.size)
    assert np.linalg.norm(defect, 2) <= 0.05


def test_circle_unweighted_l2_norm(circle_operator):
    S = circle_operator
    norm = weighted_opnorm(S, CompositeWeight.unit(), 2.0, trials=50)
    assert 0.95 <= norm <= 1.02


def test_odd_node_count_on_closed_curve_is_bumped():
    S = discretize(circle(0.0, 1.0, 64), 65)
    assert S.size == 66


def test_segment_odd_symmetry():
    S = discretize(segment(-1.0, 1.0, 1025))
    assert S.quadrature_kind == "pv-symmetric-exclusion"
    result = apply(S, SampledFunction.constant(S.curve))
    assert abs(result.values[512]) < 1e-10


def test_segment_closed_form():
    S = discretize(segment(-1.0, 1.0, 1025))
    result = apply(S, SampledFunction.constant(S.curve))
    expected = np.log(1.0 / 3.0) / (np.pi * 1j)
    assert abs(result.values[768] - expected) < 1e-3


def test_straight_curve_has_no_curvature_term():
    S = discretize(segment(0.0, 1.0 + 1.0j, 64))
    assert np.allclose(np.diag(S.matrix), 0.0)


def test_apply_zero_and_mismatch():
    S = discretize(segment(-1.0, 1.0, 64))
    zero = apply(S, SampledFunction.constant(S.curve, 0.0))
    assert np.all(zero.values == 0.0)
    with pytest.raises(DimensionMismatchError):
        apply(S, SampledFunction.constant(segment(-1.0, 1.0, 65)))


def test_too_few_nodes():
    with pytest.raises(DegenerateStencilError):
        discretize(segment(-1.0, 1.0, 16))


def test_weighted_opnorm_is_seeded():
    S = discretize(segment(-1.0, 1.0, 64))
    w = khvedelidze_weight([0.0], [0.25])
    first = weighted_opnorm(S, w, 2.5, trials=50, seed=3)
    second = weighted_opnorm(S, w, 2.5, trials=50, seed=3)
    assert first == second
    with pytest.raises(InvalidParameterError):
        weighted_opnorm(S, w, 2.5, trials=10)


def test_resolve_exponent():
    curve = segment(-1.0, 1.0, 64)
    assert resolve_exponent(3.0, curve).p_min == 3.0
    made = resolve_exponent(lambda c: ExponentFunction.radial(c, 0.0, 2.0, 1.0), curve)
    assert made.curve is curve
    with pytest.raises(DimensionMismatchError):
        resolve_exponent(ExponentFunction.constant(segment(-1.0, 1.0, 33), 2.0), curve)


def test_classify_refinement():
    assert classify_refinement([1.0, 1.2, 1.44, 1.73]) == ProbeVerdict.BLOWUP
    assert classify_refinement([1.0, 1.01, 1.02]) == ProbeVerdict.BOUNDED
    assert classify_refinement([1.0, 1.08, 1.166, 1.26]) == ProbeVerdict.INCONCLUSIVE


def test_decelerating_growth_is_bounded():
    # in-strip sequence for p = 3, λ = -0.25 at 256..2048 nodes
    estimates = [2.216, 2.395, 2.554, 2.700]
    assert 1.2 < projected_growth(estimates) < 2.0
    assert classify_refinement(estimates) == ProbeVerdict.BOUNDED


def test_steady_power_growth_is_not_bounded():
    steady = list(1.06 ** np.arange(4))
    assert projected_growth(steady) == float("inf")
    assert classify_refinement(steady) == ProbeVerdict.INCONCLUSIVE
    # slow power law with a decaying transient on top
    steps = 0.046 + 0.07 * 0.85 ** np.arange(3)
    transient = list(np.exp(np.concatenate([[0.0], np.cumsum(steps)])))
    assert classify_refinement(transient) != ProbeVerdict.BOUNDED


def test_projected_growth_of_geometric_steps():
    steps = np.array([0.1, 0.05, 0.025])
    estimates = np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    assert projected_growth(estimates) == pytest.approx(np.exp(0.025), rel=1e-9)
    assert projected_growth([1.0, 1.1, 1.05, 1.1]) == float("inf")
    assert projected_growth([1.0, 1.1]) == float("inf")


def test_refinement_needs_increasing_meshes():
    w = CompositeWeight.unit()
    with pytest.raises(InvalidParameterError):
        refinement_probe(lambda n: segment(-1.0, 1.0, n), w, 2.0, [128, 64, 256])
    with pytest.raises(InvalidParameterError):
        refinement_probe(lambda n: segment(-1.0, 1.0, n), w, 2.0, [64, 128])


def test_khvedelidze_outside_strip_blows_up():
    estimates, verdict = refinement_probe(
        lambda n: segment(-1.0, 1.0, n),
        khvedelidze_weight([0.0], [0.75]),
        2.0,
        [128, 256, 512, 1024],
        trials=50,
    )
    assert len(estimates) == 4
    assert verdict == ProbeVerdict.BLOWUP


def test_khvedelidze_inside_strip_settles():
    estimates, verdict = refinement_probe(
        lambda n: segment(-1.0, 1.0, n),
        khvedelidze_weight([0.0], [0.25]),
        2.0,
        [128, 256, 512, 1024],
        trials=50,
    )
    assert verdict != ProbeVerdict.BLOWUP
    assert estimates[-1] / estimates[-2] <= BOUNDED_GROWTH


@pytest.mark.parametrize(
    "p, lam, inside",
    [(2.0, 0.25, True), (3.0, -0.25, True), (2.0, 0.75, False), (3.0, -0.75, False)],
)
def test_khvedelidze_matrix_cells_at_2048_nodes(p, lam, inside):
    assert (0.0 < 1.0 / p + lam < 1.0) == inside
    _, verdict = refinement_probe(
        lambda n: segment(-1.0, 1.0, n),
        khvedelidze_weight([0.0], [lam]),
        p,
        [256, 512, 1024, 2048],
        trials=50,
    )
    if inside:
        assert verdict == ProbeVerdict.BOUNDED
    else:
        assert verdict != ProbeVerdict.BOUNDED


def test_segment_kernel_is_antisymmetric_between_interior_nodes():
    S = discretize(segment(-1.0, 1.0, 257))
    inner = S.matrix[1:-1, 1:-1]
    assert np.abs(inner + inner.T).max() <= 1e-6


def test_opnorm_ignores_constant_weight_factors():
    S = discretize(segment(-1.0, 1.0, 64))
    w = khvedelidze_weight([0.0], [0.25])
    base = weighted_opnorm(S, w, 2.5, trials=50)
    for c in (1e-3, 7.0, 1e4):
        assert weighted_opnorm(S, w.scaled(c), 2.5, trials=50) == pytest.approx(base, rel=1e-9)


def test_opnorm_is_a_lower_bound_close_to_the_top_singular_value():
    S = discretize(segment(-1.0, 1.0, 128))
    root = np.sqrt(S.curve.node_cells())
    sigma = np.linalg.norm(root[:, None] * S.matrix / root[None, :], 2)
    estimate = weighted_opnorm(S, CompositeWeight.unit(), 2.0, trials=50)
    assert estimate <= sigma + 1e-9
    assert estimate >= 0.95 * sigma


def test_circle_square_defect_shrinks_under_refinement():
    defects = []
    for n in (128, 256, 512):
        S = discretize(circle(0.0, 1.0, n))
        defects.append(np.linalg.norm(S.matrix @ S.matrix - np.eye(S.size), 2))
    assert defects[0] > defects[1] > defects[2]
