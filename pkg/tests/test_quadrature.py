from math import factorial

import numpy as np
import pytest

from rtbvc.quadrature import segment_rule, triangle_rule


def _triangle_monomial(a, b):
    # integral of x^a y^b over the reference triangle
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(1, 21))
def test_triangle_exactness_sweep(degree):
    rule = triangle_rule(degree)
    x, y = rule.points.T
    for total in range(degree + 1):
        for a in range(total + 1):
            b = total - a
            exact = _triangle_monomial(a, b)
            approx = rule.weights @ (x**a * y**b)
            assert abs(approx - exact) <= 1e-13 * exact


@pytest.mark.parametrize("degree", range(1, 42))
def test_segment_exactness_sweep(degree):
    rule = segment_rule(degree)
    s = rule.points[:, 0]
    for p in range(degree + 1):
        assert abs(rule.weights @ s**p - 1.0 / (p + 1)) <= 1e-13 / (p + 1)


@pytest.mark.parametrize("degree", range(1, 21))
def test_triangle_points_inside_and_weights_positive(degree):
    rule = triangle_rule(degree)
    assert np.all(rule.weights > 0)
    bary = rule.barycentric
    assert np.all(bary >= -1e-15)
    assert np.allclose(bary.sum(axis=1), 1.0)


def test_degree_one_rule_is_centroid():
    rule = triangle_rule(1)
    assert len(rule) == 1
    assert np.allclose(rule.points, [[1 / 3, 1 / 3]])
    assert rule.weights[0] == pytest.approx(0.5)


def test_total_weight_is_area():
    for d in (1, 5, 12, 20):
        assert triangle_rule(d).weights.sum() == pytest.approx(0.5, abs=1e-15)
        assert segment_rule(d).weights.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("bad", [0, -1, 21])
def test_triangle_degree_out_of_range(bad):
    with pytest.raises(ValueError):
        triangle_rule(bad)


def test_segment_degree_out_of_range():
    with pytest.raises(ValueError):
        segment_rule(42)


def test_rules_are_cached_and_read_only():
    rule = triangle_rule(6)
    assert triangle_rule(6) is rule
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0
