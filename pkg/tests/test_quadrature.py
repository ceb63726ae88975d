from math import factorial

import numpy as np
import pytest

from curvedsurf.quadrature import rule


def triangle_monomial(p, q):
    return factorial(p) * factorial(q) / factorial(p + q + 2)


def test_centroid_rule():
    r = rule(2, 1)
    assert len(r) == 1
    assert np.allclose(r.points, [[1 / 3, 1 / 3]])
    assert np.allclose(r.weights, [0.5])


def test_x2y2():
    r = rule(2, 4)
    assert r.integrate(lambda x: x[..., 0] ** 2 * x[..., 1] ** 2) == pytest.approx(1 / 180, rel=1e-13)


def test_segment_two_point():
    r = rule(1, 3)
    assert len(r) == 2
    assert r.integrate(lambda t: t[..., 0] ** 3) == pytest.approx(0.25, rel=1e-14)


@pytest.mark.parametrize("degree", range(0, 21))
def test_exactness_sweep(degree):
    r = rule(2, degree)
    assert r.weights.sum() == pytest.approx(0.5, abs=1e-14)
    assert np.all(r.weights > 0)
    assert np.all(r.points >= 0) and np.all(r.points.sum(1) <= 1)
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            val = np.sum(r.weights * r.points[:, 0] ** p * r.points[:, 1] ** q)
            assert val == pytest.approx(triangle_monomial(p, q), rel=1e-13)
    s = rule(1, degree)
    assert s.weights.sum() == pytest.approx(1.0, abs=1e-14)
    for p in range(degree + 1):
        assert np.sum(s.weights * s.points[:, 0] ** p) == pytest.approx(1 / (p + 1), rel=1e-13)


def test_degree_limit():
    with pytest.raises(ValueError, match="20"):
        rule(2, 21)
    with pytest.raises(ValueError):
        rule(3, 2)
