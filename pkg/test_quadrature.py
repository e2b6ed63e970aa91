#!/usr/bin/env python3
"""
Test graded Gauss rules on curve arcs.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

import numpy as np
import pytest

from cauchy_lab.geometry import circle, portion, segment
from cauchy_lab.quadrature import graded_rule, portion_rule, singular_arc_positions


def test_rule_covers_the_arc():
    curve = segment(0.0, 1.0, 33)
    rule = graded_rule(curve, np.array([[0.0, 1.0]]))
    assert rule.measure == pytest.approx(1.0, abs=1e-14)
    assert np.all((rule.arc > 0.0) & (rule.arc < 1.0))


def test_polynomials_are_exact():
    curve = segment(0.0, 2.0, 9)
    rule = graded_rule(curve, np.array([[0.0, 2.0]]))
    assert rule.integrate(rule.points.real**7) == pytest.approx(2.0**8 / 8.0, rel=1e-12)


def test_grading_resolves_endpoint_singularity():
    curve = segment(0.0, 1.0, 17)
    rule = graded_rule(curve, np.array([[0.0, 1.0]]), singular_arcs=np.array([0.0]), floor=1e-12)
    assert rule.integrate(np.abs(rule.points) ** -0.5) == pytest.approx(2.0, rel=1e-4)


def test_exclusion_removes_arc_around_anchor():
    curve = segment(0.0, 1.0, 17)
    rule = graded_rule(
        curve, np.array([[0.0, 1.0]]), excluded_arcs=np.array([0.5]), exclude_radius=0.1
    )
    assert rule.measure == pytest.approx(0.8, abs=1e-12)
    assert np.all(np.abs(rule.arc - 0.5) >= 0.1 - 1e-12)


def test_empty_arcs_give_empty_rule():
    rule = graded_rule(segment(0.0, 1.0, 5), np.array([[0.5, 0.5]]))
    assert rule.measure == 0.0
    assert len(rule.points) == 0


def test_singular_positions():
    closed = circle(0.0, 1.0, 64)
    positions = singular_arc_positions(closed, [1.0])
    assert len(positions) == 3
    assert positions[0] == pytest.approx(0.0, abs=1e-12)
    assert len(singular_arc_positions(segment(-1.0, 1.0, 33), [0.5j])) == 0


@pytest.mark.parametrize("R", [0.05, 0.3, 1.5])
def test_portion_rule_measure(R):
    curve = circle(0.0, 1.0, 256)
    part = portion(curve, curve.nodes[0], R)
    rule = portion_rule(curve, part, anchors=[curve.nodes[10]])
    assert rule.measure == pytest.approx(part.measure, rel=1e-12)
