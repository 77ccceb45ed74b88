import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrospec.errors import QuadratureError
from hydrospec.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, integrate, integrate_scalar


def test_weights_sum_to_two():
    assert math.isclose(KRONROD_WEIGHTS.sum(), 2.0, rel_tol=1e-15)
    assert math.isclose(GAUSS_WEIGHTS.sum(), 2.0, rel_tol=1e-15)


@pytest.mark.parametrize("transform", [True, False])
def test_polynomials(transform):
    for k in range(8):
        val, _ = integrate_scalar(lambda x, k=k: x**k, 0.0, 1.0, endpoint_transform=transform)
        assert val == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_endpoint_power_law():
    val, _ = integrate_scalar(lambda x: x**-0.5, 0.0, 1.0, rtol=1e-13)
    assert val == pytest.approx(2.0, rel=1e-12)
    val, _ = integrate_scalar(lambda x: x**0.25, 0.0, 1.0)
    assert val == pytest.approx(0.8, rel=1e-13)


def test_piecewise_constant_exact_on_breakpoints():
    edges = np.array([0.0, 0.3, 0.5, 1.0])
    vals = np.array([2.0, -1.0, 4.0])
    res = integrate(lambda x: vals[np.searchsorted(edges, x) - 1], edges)
    assert np.allclose(res.values, vals * np.diff(edges), rtol=2e-16, atol=0)


def test_complex_components_and_near_pole():
    # int_0^1 dx / (c - x)^2 = 1/(c-1) - 1/c ... with sign: 1/(c - 1) - 1/c
    cs = np.array([1.0 + 1e-3j, -0.5 + 0.2j, 2.0 + 0j])
    res = integrate(lambda x: 1.0 / (cs[None, :] - x[:, None]) ** 2, [0.0, 1.0], rtol=1e-13)
    exact = 1.0 / (cs - 1.0) - 1.0 / cs
    assert np.allclose(res.total, exact, rtol=1e-11, atol=0)
    assert np.all(res.converged)


def test_array_rtol_per_component():
    res = integrate(lambda x: np.stack([np.sin(x), np.exp(x)], axis=1), [0.0, 1.0], rtol=np.array([1e-6, 1e-13]))
    assert res.total[1] == pytest.approx(math.e - 1, rel=1e-13)
    assert res.total[0] == pytest.approx(1 - math.cos(1.0), rel=1e-6)


def test_failure_is_reported():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(1.0 / x) / x**2, [0.0, 1.0], max_intervals=200, raise_on_failure=True)
    assert info.value.segment == 0
    res = integrate(lambda x: np.sin(1.0 / x) / x**2, [0.0, 1.0], max_intervals=200)
    assert not res.converged[0]


def test_bad_breakpoints():
    with pytest.raises(ValueError):
        integrate(np.sin, [0.0])
    with pytest.raises(ValueError):
        integrate(np.sin, [0.0, 1.0, 0.5])


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-5, 5), w=st.floats(0.1, 5), freq=st.floats(0.1, 20))
def test_trig_against_antiderivative(a, w, freq):
    b = a + w
    val, _ = integrate_scalar(lambda x: np.cos(freq * x), a, b)
    exact = (math.sin(freq * b) - math.sin(freq * a)) / freq
    assert abs(val - exact) <= 1e-11 * max(1.0, w)
