#!/usr/bin/env python3
"""
Test submultiplicative profiles, H ratios and indices of powerlikeness.

The composite-weight cases check that the indices of powerlikeness at an
anchor reproduce the Matuszewska-Orlicz indices of the factor there, and
vanish away from the anchors.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchy_lab.core.errors import InvalidParameterError
from cauchy_lab.core.types import INDEX_TOLERANCE
from cauchy_lab.geometry import circle, segment
from cauchy_lab.submult import (
    IndexEstimate,
    SubmultProfile,
    check_submultiplicative,
    h_ratio,
    indices,
    portion_r_grid,
    powerlikeness_indices,
    v0,
)
from cauchy_lab.weights import CompositeWeight, RadialFactor, khvedelidze_weight, mo_indices


def power_profile(gamma: float) -> SubmultProfile:
    return SubmultProfile.from_function(lambda x: x**gamma, label=f"x^{gamma}")


def test_power_profile_is_submultiplicative():
    ok, worst = check_submultiplicative(power_profile(0.4))
    assert ok
    assert worst == pytest.approx(1.0, abs=1e-12)


def test_two_slope_profile_is_submultiplicative():
    phi = SubmultProfile.from_function(lambda x: np.maximum(x**0.2, x**0.7))
    ok, worst = check_submultiplicative(phi, pair_count=5000)
    assert ok
    assert worst <= 1.0 + 1e-9


def test_log_square_profile_is_not_submultiplicative():
    phi = SubmultProfile.from_function(lambda x: 1.0 + np.log(x) ** 2)
    assert phi.ratio_at(np.e, np.e) == pytest.approx(1.25, abs=0.01)
    ok, worst = check_submultiplicative(phi, pair_count=20000)
    assert not ok
    assert 1.2 < worst <= 4.0 / 3.0 + 1e-9


def test_off_lattice_profile_uses_interpolation():
    x = np.geomspace(2.0**-21, 2.0**21, 334)
    phi = SubmultProfile(x=x, values=np.maximum(x**-0.1, x**0.3))
    ok, worst = check_submultiplicative(phi)
    assert ok


def test_check_needs_enough_pairs():
    with pytest.raises(InvalidParameterError):
        check_submultiplicative(power_profile(0.1), pair_count=10)


def test_profile_must_cover_range():
    x = np.geomspace(1e-3, 1e3, 50)
    with pytest.raises(InvalidParameterError):
        SubmultProfile(x=x, values=x)


@pytest.mark.parametrize("gamma", [-0.5, 0.0, 0.3])
def test_indices_of_power(gamma):
    alpha, beta = indices(power_profile(gamma))
    assert alpha == pytest.approx(gamma, abs=1e-9)
    assert beta == pytest.approx(gamma, abs=1e-9)


def test_indices_of_two_slope_profile():
    estimate = indices(SubmultProfile.from_function(lambda x: np.maximum(x**0.2, x**0.7)))
    alpha, beta = estimate
    assert alpha == pytest.approx(0.2, abs=1e-9)
    assert beta == pytest.approx(0.7, abs=1e-9)
    assert estimate.agrees and not estimate.nonconverged


def test_regularity_bound():
    assert power_profile(0.5).regularity_bound() == pytest.approx(np.sqrt(2.0), rel=1e-9)


def test_h_ratio_trivial_cases():
    curve = segment(0.0, 1.0, 65)
    assert h_ratio(CompositeWeight.unit(), curve, 0.5, 0.1, 0.3) == 1.0
    w = khvedelidze_weight([0.0], [0.3])
    assert h_ratio(w, curve, 0.5, 0.2, 0.2) == 1.0


def test_h_ratio_power_weight_at_endpoint():
    curve = segment(0.0, 1.0, 65)
    w = khvedelidze_weight([0.0], [0.3])
    assert h_ratio(w, curve, 0.0, 0.1, 0.2) == pytest.approx(0.5**0.3, abs=1e-5)


def test_h_ratio_rejects_bad_radius():
    curve = segment(0.0, 1.0, 65)
    w = khvedelidze_weight([0.0], [0.3])
    with pytest.raises(InvalidParameterError):
        h_ratio(w, curve, 0.0, 0.0, 0.2)


def test_v0_trivial_cases():
    curve = segment(0.0, 1.0, 65)
    assert v0(CompositeWeight.unit(), curve, 0.5, 0.3) == 1.0
    assert v0(khvedelidze_weight([0.0], [0.3]), curve, 0.0, 1.0) == 1.0


@pytest.mark.parametrize("x", [0.25, 4.0])
def test_v0_power_weight(x):
    curve = segment(0.0, 1.0, 65)
    w = khvedelidze_weight([0.0], [0.3])
    assert v0(w, curve, 0.0, x) == pytest.approx(x**0.3, abs=1e-3)


@given(st.floats(min_value=-0.8, max_value=0.8, allow_nan=False))
@settings(max_examples=8, deadline=None)
def test_powerlikeness_of_power_weight(lam: float):
    """Property: α = β = λ for |τ - t|^λ."""
    curve = segment(-1.0, 1.0, 129)
    estimate = powerlikeness_indices(khvedelidze_weight([0.0], [lam]), curve, 0.0)
    assert estimate.lower == pytest.approx(lam, abs=INDEX_TOLERANCE)
    assert estimate.upper == pytest.approx(lam, abs=INDEX_TOLERANCE)


def test_powerlikeness_of_unit_weight_vanishes():
    alpha, beta = powerlikeness_indices(CompositeWeight.unit(), segment(0.0, 1.0, 33), 0.5)
    assert alpha == 0.0 and beta == 0.0


def _segment_weight():
    curve = segment(-1.0, 1.0, 257)
    w = CompositeWeight((
        (0.0, RadialFactor.power(0.3)),
        (0.5, RadialFactor.wave(-0.2, 0.2, 3.0)),
        (-0.5, RadialFactor.oscillating(0.5, 0.2, 1.0)),
    ))
    return curve, w


def _circle_weight():
    curve = circle(0.0, 1.0, 256)
    w = CompositeWeight((
        (curve.nodes[0], RadialFactor.power(-0.4)),
        (curve.nodes[64], RadialFactor.wave(0.25, 0.15, 4.0)),
        (curve.nodes[160], RadialFactor.power(0.5)),
        (curve.nodes[208], RadialFactor.oscillating(-0.3, 0.1, 2.0)),
    ))
    return curve, w


@pytest.mark.parametrize("build", [_segment_weight, _circle_weight])
def test_powerlikeness_matches_mo_indices_at_anchors(build):
    curve, w = build()
    for anchor, factor in w.factors:
        m, M = mo_indices(factor)
        alpha, beta = powerlikeness_indices(w, curve, anchor)
        assert alpha == pytest.approx(m, abs=INDEX_TOLERANCE)
        assert beta == pytest.approx(M, abs=INDEX_TOLERANCE)


@pytest.mark.parametrize("build", [_segment_weight, _circle_weight])
def test_powerlikeness_vanishes_off_anchors(build):
    curve, w = build()
    t = curve.nodes[curve.node_count // 4 + 3]
    alpha, beta = powerlikeness_indices(w, curve, t)
    assert abs(alpha) <= INDEX_TOLERANCE
    assert abs(beta) <= INDEX_TOLERANCE


def test_powerlikeness_reaches_both_oscillating_slopes():
    """The log-log phase only turns deep in the R -> 0 tail."""
    curve = segment(-1.0, 1.0, 257)
    w = CompositeWeight(((0.0, RadialFactor.oscillating(0.5, 0.2, 1.0)),))
    estimate = powerlikeness_indices(w, curve, 0.0)
    spread = 0.2 * np.sqrt(2.0)
    assert estimate.lower == pytest.approx(0.5 - spread, abs=INDEX_TOLERANCE)
    assert estimate.upper == pytest.approx(0.5 + spread, abs=INDEX_TOLERANCE)
    assert estimate.lower < estimate.upper
    assert not estimate.nonconverged


def test_indices_flag_non_submultiplicative_profiles():
    estimate = indices(SubmultProfile.from_function(lambda x: 1.0 + np.log(x) ** 2))
    assert not estimate.submultiplicative
    assert estimate.worst_ratio > 1.2
    assert estimate.nonconverged


def test_unordered_indices_are_nonconverged():
    estimate = IndexEstimate(lower=0.4, upper=0.2, tail_lower=0.4, tail_upper=0.2)
    assert estimate.drift == 0.0
    assert not estimate.ordered
    assert estimate.nonconverged


def test_indices_record_profile_checks():
    estimate = indices(power_profile(0.5))
    assert estimate.submultiplicative
    assert estimate.worst_ratio == pytest.approx(1.0, abs=1e-9)
    assert estimate.regularity == pytest.approx(np.sqrt(2.0), rel=1e-9)


@pytest.mark.parametrize("x", [0.25, 4.0])
def test_v0_over_curve_portions_matches_ray_limit(x):
    curve = segment(0.0, 1.0, 65)
    w = khvedelidze_weight([0.0], [0.3])
    on_curve = v0(w, curve, 0.0, x, r_grid=portion_r_grid(curve, 0.0))
    assert on_curve == pytest.approx(v0(w, curve, 0.0, x), abs=1e-3)
    assert on_curve == pytest.approx(x**0.3, abs=1e-3)
