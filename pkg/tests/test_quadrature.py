import math

import numpy as np
import pytest

from burgerlab.quadrature import (
    BracketError,
    QuadratureError,
    adaptive_simpson,
    bisect,
    cumulative,
    integrate,
    periodic_breaks,
)


def test_simpson_polynomial_exact():
    val = adaptive_simpson(lambda x: x**3 - 2 * x, [0.0, -1.0], [2.0, 1.0])
    assert np.allclose(val, [0.0, 0.0], atol=1e-14)


def test_simpson_kink_with_breakpoint():
    # sqrt(2) |cos(x/2)| has a kink at pi; the integral over a period is 4 sqrt(2)
    fn = lambda x: math.sqrt(2) * np.abs(np.cos(x / 2))
    assert integrate(fn, 0.0, 2 * math.pi, breaks=[math.pi]) == pytest.approx(4 * math.sqrt(2), abs=1e-12)
    assert integrate(fn, 2 * math.pi, 0.0, breaks=[math.pi]) == pytest.approx(-4 * math.sqrt(2), abs=1e-12)
    assert integrate(fn, 1.0, 1.0) == 0.0


def test_simpson_depth_limit():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: np.sign(x - 0.3), 0.0, 1.0, tol=1e-16, max_depth=4)


def test_periodic_breaks():
    pts = periodic_breaks([math.pi], 0.0, 5 * math.pi, 2 * math.pi)
    assert np.allclose(pts, [math.pi, 3 * math.pi])
    assert periodic_breaks([], 0.0, 1.0, 1.0).size == 0


def test_cumulative_matches_antiderivative():
    x = np.linspace(0.0, 3.0, 17)
    got = cumulative(np.cos, x, breaks=[1.0])
    assert np.allclose(got, np.sin(x), atol=1e-13)


def test_bisect():
    root = bisect(lambda t: t * t - 2.0, 0.0, 2.0, tol=1e-14)
    assert root == pytest.approx(math.sqrt(2), abs=1e-13)
    with pytest.raises(BracketError):
        bisect(lambda t: t * t + 1.0, -1.0, 1.0)
