import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from chainbreak.quadrature import GAUSS_W, KRONROD_W, NODES, integrate, integrate_scalar


def test_rule_weights():
    assert KRONROD_W.sum() == pytest.approx(2.0, abs=1e-14)
    assert GAUSS_W.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(NODES, -NODES[::-1])
    # Gauss 7-point rule integrates degree 13 exactly
    assert GAUSS_W @ NODES ** 12 == pytest.approx(2.0 / 13.0, rel=1e-13)
    assert KRONROD_W @ NODES ** 22 == pytest.approx(2.0 / 23.0, rel=1e-13)


def test_polynomial_exact():
    val = integrate_scalar(lambda x: x ** 5 - 3 * x ** 2, -1.0, 2.0)
    assert val == pytest.approx((64 - 1) / 6 - (8 + 1), rel=1e-14)


def test_many_intervals_with_groups():
    a = np.array([0.0, 1.0, 0.0])
    b = np.array([1.0, 2.0, math.pi])
    out = integrate(lambda x, idx: np.sin(x), a, b, groups=[0, 0, 1])
    assert out[0] == pytest.approx(1 - math.cos(2.0), rel=1e-12)
    assert out[1] == pytest.approx(2.0, rel=1e-12)


def test_sharp_exponential_matches_scipy():
    f = lambda x: np.exp(-50.0 * (3.0 - x))
    ref, _ = sp_integrate.quad(lambda x: math.exp(-50.0 * (3.0 - x)), 0, 3, epsrel=1e-13, limit=200)
    assert integrate_scalar(f, 0.0, 3.0, rtol=1e-12) == pytest.approx(ref, rel=1e-10)


@given(st.floats(0.1, 30.0), st.floats(0.0, 5.0), st.floats(0.01, 5.0))
def test_exponential_property(rate, a, width):
    b = a + width
    got = integrate_scalar(lambda x: np.exp(-rate * (b - x)), a, b, rtol=1e-11)
    exact = -math.expm1(-rate * width) / rate
    assert got == pytest.approx(exact, rel=1e-9)


def test_empty_interval():
    assert integrate_scalar(np.cos, 1.0, 1.0) == 0.0
