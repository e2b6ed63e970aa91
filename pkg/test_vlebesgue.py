#!/usr/bin/env python3
"""
Test modulars and Luxemburg-Nakano norms.

Constant exponents are checked against direct L^p quadrature, the two-piece
exponent against an independent scalar root solve.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from cauchy_lab.core.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NormOverflowError,
)
from cauchy_lab.exponent import ExponentFunction, conjugate
from cauchy_lab.geometry import segment
from cauchy_lab.vlebesgue import (
    SampledFunction,
    luxemburg_from_samples,
    luxemburg_norm,
    modular,
    modular_from_samples,
)
from cauchy_lab.weights import CompositeWeight, khvedelidze_weight


@pytest.fixture
def unit_segment():
    return segment(0.0, 1.0, 1001)


def test_modular_of_one(unit_segment):
    f = SampledFunction.constant(unit_segment)
    p = ExponentFunction.constant(unit_segment, 2.0)
    assert modular(f, CompositeWeight.unit(), p, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert modular(f, None, p, 2.0) == pytest.approx(0.25, abs=1e-6)


def test_modular_with_power_weight(unit_segment):
    f = SampledFunction.constant(unit_segment)
    p = ExponentFunction.constant(unit_segment, 2.0)
    w = khvedelidze_weight([0.0], [0.25])
    assert modular(f, w, p, 1.0) == pytest.approx(2.0 / 3.0, abs=1e-3)


def test_modular_rejects_nonpositive_lambda(unit_segment):
    f = SampledFunction.constant(unit_segment)
    p = ExponentFunction.constant(unit_segment, 2.0)
    with pytest.raises(InvalidParameterError):
        modular(f, None, p, 0.0)
    with pytest.raises(InvalidParameterError):
        modular_from_samples(np.ones(3), 2.0, np.ones(3), -1.0)


def test_norm_of_one(unit_segment):
    f = SampledFunction.constant(unit_segment)
    p = ExponentFunction.constant(unit_segment, 2.0)
    assert luxemburg_norm(f, None, p) == pytest.approx(1.0, abs=1e-12)


def test_constant_exponent_matches_lp_quadrature():
    rng = np.random.default_rng(7)
    curve = segment(0.0, 1.0, 129)
    cells = curve.node_cells()
    for _ in range(100):
        p_value = rng.uniform(1.05, 8.0)
        values = rng.standard_normal(129) + 1j * rng.standard_normal(129)
        f = SampledFunction(curve, values)
        p = ExponentFunction.constant(curve, p_value)
        direct = (cells * np.abs(values) ** p_value).sum() ** (1.0 / p_value)
        assert luxemburg_norm(f, None, p) == pytest.approx(direct, rel=1e-8)


@pytest.mark.parametrize("height", [1.0, 2.0, 0.3])
def test_two_piece_exponent(height):
    """p = 2 on [0, 1/2), p = 3 on (1/2, 1]; no node sits on the jump."""
    curve = segment(0.0, 1.0, 1000)
    p = ExponentFunction.from_function(curve, lambda z: np.where(z.real < 0.5, 2.0, 3.0))
    f = SampledFunction.constant(curve, height)

    def equation(lam: float) -> float:
        return 0.5 * (height / lam) ** 2 + 0.5 * (height / lam) ** 3 - 1.0

    expected = brentq(equation, 1e-3, 1e3, xtol=1e-15)
    assert luxemburg_norm(f, None, p) == pytest.approx(expected, rel=1e-6)


def test_norm_solves_the_modular_equation():
    curve = segment(0.0, 1.0, 257)
    p = ExponentFunction.radial(curve, 0.5, 2.0, 2.0)
    f = SampledFunction.from_function(curve, lambda z: 1.0 + 3.0 * z.real**2)
    w = khvedelidze_weight([0.5], [-0.3])
    norm = luxemburg_norm(f, w, p)
    assert modular(f, w, p, norm) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(min_value=1e-6, max_value=1e6, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_norm_is_homogeneous(c: float):
    """Property: ‖c f‖ = c ‖f‖ for variable exponents too."""
    curve = segment(0.0, 1.0, 65)
    p = ExponentFunction.from_function(curve, lambda z: 1.2 + 4.0 * z.real)
    f = SampledFunction.from_function(curve, lambda z: np.cos(5.0 * z.real) + 0.5j)
    assert luxemburg_norm(f * c, None, p) == pytest.approx(c * luxemburg_norm(f, None, p), rel=1e-9)


def test_extreme_magnitudes_do_not_overflow():
    a = np.array([1e200, 1e-200, 1.0])
    p = np.array([1.5, 90.0, 3.0])
    c = np.array([0.1, 0.2, 0.3])
    norm = luxemburg_from_samples(a, p, c)
    assert np.isfinite(norm) and norm > 0.0
    assert modular_from_samples(a, p, c, norm) == pytest.approx(1.0, abs=1e-9)


def test_vanishing_function_has_zero_norm():
    assert luxemburg_from_samples(np.zeros(4), np.full(4, 2.5), np.ones(4)) == 0.0


def test_non_finite_samples_rejected():
    with pytest.raises(NormOverflowError):
        luxemburg_from_samples(np.array([1.0, np.inf]), np.array([2.0, 3.0]), np.ones(2))


def test_shared_nodes_required():
    f = SampledFunction.constant(segment(0.0, 1.0, 33))
    p = ExponentFunction.constant(segment(0.0, 1.0, 65), 2.0)
    with pytest.raises(DimensionMismatchError):
        luxemburg_norm(f, None, p)
    with pytest.raises(DimensionMismatchError):
        SampledFunction(segment(0.0, 1.0, 5), np.ones(4))


def _random_pair(curve, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(curve.node_count) + 1j * rng.standard_normal(curve.node_count)
    g = rng.standard_normal(curve.node_count) * np.exp(3.0 * rng.standard_normal(curve.node_count))
    return SampledFunction(curve, f), SampledFunction(curve, g)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_norm_triangle_inequality(seed: int):
    curve = segment(0.0, 1.0, 129)
    p = ExponentFunction.from_function(curve, lambda z: 1.2 + 2.0 * z.real)
    f, g = _random_pair(curve, seed)
    w = khvedelidze_weight([0.0], [0.3])
    total = luxemburg_norm(f + g, w, p)
    assert total <= (luxemburg_norm(f, w, p) + luxemburg_norm(g, w, p)) * (1.0 + 1e-8)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_holder_pairing_with_conjugate_exponent(seed: int):
    """∫|f g| <= 2 ‖f‖_p ‖g‖_q for q the conjugate of p."""
    curve = segment(0.0, 1.0, 129)
    p = ExponentFunction.from_function(curve, lambda z: 1.2 + 2.0 * z.real)
    q = conjugate(p)
    f, g = _random_pair(curve, seed)
    pairing = float((np.abs(f.values * g.values) * curve.node_cells()).sum())
    assert pairing <= 2.0 * luxemburg_norm(f, None, p) * luxemburg_norm(g, None, q) * (1.0 + 1e-8)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_norm_is_monotone_in_magnitude(seed: int):
    curve = segment(0.0, 1.0, 129)
    p = ExponentFunction.from_function(curve, lambda z: 1.2 + 2.0 * z.real)
    f, _ = _random_pair(curve, seed)
    shrink = np.random.default_rng(seed).uniform(0.0, 1.0, curve.node_count)
    smaller = SampledFunction(curve, f.values * shrink)
    assert luxemburg_norm(smaller, None, p) <= luxemburg_norm(f, None, p) * (1.0 + 1e-8)
