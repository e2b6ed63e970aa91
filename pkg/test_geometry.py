#!/usr/bin/env python3
"""
Test curve construction, portions and the Carleson constant.

Covers:
1. Polyline lengths for segments and circles
2. Portion measures against chord-to-arc closed forms
3. Carleson constants of the segment, the circle and the spiral family
4. Curve file round trip
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchy_lab.core.errors import (
    InvalidGeometryError,
    InvalidParameterError,
    NotRectifiableError,
    PointNotOnCurveError,
)
from cauchy_lab.geometry import (
    build_polyline,
    carleson_constant,
    carleson_verdict,
    circle,
    portion,
    portion_measures,
    read_curve,
    segment,
    spiral_example,
    write_curve,
)


def test_circle_length():
    curve = circle(0.0, 1.0, 4096)
    assert curve.is_closed
    assert curve.node_count == 4096
    assert abs(curve.length - 2.0 * np.pi) < 1e-4


def test_segment_length_is_exact():
    curve = build_polyline([0.0, 1.0], closed=False)
    assert curve.length == 1.0
    assert curve.node_count == 2


def test_degenerate_input_rejected():
    with pytest.raises(InvalidGeometryError):
        build_polyline([0.5 + 0.5j, 0.5 + 0.5j])
    with pytest.raises(InvalidGeometryError):
        build_polyline([0.0, 1.0, 1.0, 2.0])
    with pytest.raises(InvalidGeometryError):
        build_polyline([0.0, np.nan])


def test_node_cells_sum_to_length():
    for curve in (segment(0.0, 1.0, 11), circle(0.0, 2.0, 64)):
        assert abs(curve.node_cells().sum() - curve.length) < 1e-12


def test_point_at_arc_wraps_on_closed_curves():
    curve = circle(0.0, 1.0, 64)
    assert abs(curve.point_at_arc(curve.length + 0.0) - curve.point_at_arc(0.0)) < 1e-12
    assert abs(curve.point_at_arc(0.0) - 1.0) < 1e-12


def test_portion_segment_from_endpoint():
    curve = segment(0.0, 1.0, 11)
    part = portion(curve, 0.0, 0.5)
    assert abs(part.measure - 0.5) < 1e-6
    (a, b), = part.member_arcs
    assert a == 0.0 and abs(b - 0.5) < 1e-12


def test_portion_segment_interior():
    curve = segment(0.0, 1.0, 11)
    part = portion(curve, 0.5, 0.2)
    assert abs(part.measure - 0.4) < 1e-12
    assert len(part.arcs) == 1
    a, b = part.member_arcs[0]
    assert abs(a - 0.3) < 1e-12 and abs(b - 0.7) < 1e-12


def test_portion_circle_contains_whole_curve():
    curve = circle(0.0, 1.0, 4096)
    part = portion(curve, curve.nodes[123], 3.0)
    assert abs(part.measure - 2.0 * np.pi) < 1e-4


def test_portion_circle_small_radius():
    curve = circle(0.0, 1.0, 4096)
    part = portion(curve, 1.0, 0.1)
    assert abs(part.measure - 4.0 * np.arcsin(0.05)) < 1e-4


def test_portion_errors():
    curve = segment(0.0, 1.0, 11)
    with pytest.raises(InvalidParameterError):
        portion(curve, 0.5, 0.0)
    with pytest.raises(PointNotOnCurveError):
        portion(curve, 0.5 + 0.1j, 0.2)


@given(
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    st.floats(min_value=1e-3, max_value=2.0, allow_nan=False),
)
@settings(max_examples=200, deadline=None)
def test_portion_measure_on_segment(t: float, R: float):
    """Property: |Γ(t,R)| = min(t+R, 1) - max(t-R, 0) on [0,1]."""
    curve = segment(0.0, 1.0, 101)
    expected = min(t + R, 1.0) - max(t - R, 0.0)
    assert abs(portion_measures(curve, t, [R])[0] - expected) < 1e-12
    assert abs(portion(curve, t, R).measure - expected) < 1e-12


def test_portion_measure_increases_with_radius():
    curve = circle(0.0, 1.0, 512)
    radii = np.geomspace(1e-3, 2.5, 64)
    measures = portion_measures(curve, curve.nodes[0], radii)
    assert np.all(np.diff(measures) >= -1e-12)


def test_carleson_constant_segment():
    assert abs(carleson_constant(segment(0.0, 1.0, 257)) - 2.0) < 0.1


def test_carleson_constant_circle():
    assert abs(carleson_constant(circle(0.0, 1.0, 1024)) - np.pi) < 0.05 * np.pi


def test_spiral_not_rectifiable():
    with pytest.raises(NotRectifiableError):
        spiral_example(0.5, 1024)
    with pytest.raises(NotRectifiableError):
        spiral_example(1.0, 1024)


def test_spiral_ends_at_accumulation_point():
    curve = spiral_example(2.0, 1024)
    assert curve.nodes[-1] == 0.0
    assert np.isfinite(curve.length)
    assert abs(curve.nodes[0] - (1.0 + 1j * np.sin(1.0))) < 1e-12


def test_spiral_carleson_classification():
    """alpha = 2 is Carleson, alpha = 1.5 is rectifiable but not Carleson."""
    constants, stable = carleson_verdict(lambda n: spiral_example(2.0, n), [1024, 2048])
    assert stable

    constants, stable = carleson_verdict(lambda n: spiral_example(1.5, n), [1024, 2048, 4096])
    assert not stable
    growth = [b / a for a, b in zip(constants, constants[1:])]
    assert all(g >= 1.2 for g in growth)


def test_curve_file_round_trip(tmp_path):
    curve = circle(0.5j, 2.0, 32)
    path = tmp_path / "loop.txt"
    write_curve(curve, path)
    loaded = read_curve(path)
    assert loaded.is_closed
    assert loaded.label == "loop"
    assert np.array_equal(loaded.nodes, curve.nodes)


def test_curve_file_needs_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0\n1 0\n")
    with pytest.raises(InvalidGeometryError):
        read_curve(path)


def test_resample_keeps_closure():
    curve = circle(0.0, 1.0, 64).resample(100)
    assert curve.is_closed
    assert curve.node_count == 100
    assert abs(curve.length - 2.0 * np.pi) < 0.01


def test_carleson_constant_is_stable_under_refinement():
    for factory in (lambda n: circle(0.0, 1.0, n), lambda n: segment(0.0, 1.0, n)):
        coarse = carleson_constant(factory(2048))
        fine = carleson_constant(factory(4096))
        assert abs(fine / coarse - 1.0) < 1e-2


def test_small_portions_look_like_diameters():
    """|Γ(t,R)| >= 0.9 * 2R once R is small against the curvature radius."""
    curve = circle(0.0, 1.0, 4096)
    radii = np.geomspace(8.0 * curve.mesh_width, 0.05, 16)
    for t in curve.nodes[::256]:
        ratios = portion_measures(curve, t, radii) / (2.0 * radii)
        assert ratios.min() >= 0.9
