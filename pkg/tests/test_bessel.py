import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from choquard_lsr.bessel import bessel_ik_scaled, iv, iv_scaled, kv, kv_scaled


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 20.0), st.floats(1e-3, 200.0))
def test_scaled_values_match_scipy(nu, x):
    assert iv_scaled(nu, x) == pytest.approx(special.ive(nu, x), rel=1e-10)
    assert kv_scaled(nu, x) == pytest.approx(special.kve(nu, x), rel=1e-10)


@pytest.mark.parametrize("nu", [0.5, 2.0 / 3.0, 1.0, 2.0, 4.0])
def test_derivatives_match_scipy(nu):
    x = np.geomspace(0.01, 80.0, 60)
    _, _, ip, kp = bessel_ik_scaled(nu, x)
    assert np.allclose(ip, special.ivp(nu, x) * np.exp(-x), rtol=1e-10, atol=0)
    assert np.allclose(kp, special.kvp(nu, x) * np.exp(x), rtol=1e-10, atol=0)


def test_half_order_closed_form():
    x = np.linspace(0.1, 30, 50)
    assert np.allclose(kv(0.5, x), np.sqrt(np.pi / (2 * x)) * np.exp(-x), rtol=1e-12)
    assert np.allclose(iv(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sinh(x), rtol=1e-11)


def test_wronskian_identity():
    x = np.geomspace(0.05, 100.0, 40)
    i, k, ip, kp = bessel_ik_scaled(1.5, x)
    assert np.allclose(i * kp - ip * k, -1.0 / x, rtol=1e-12)
