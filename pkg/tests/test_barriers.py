import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_bvp

from choquard_lsr.barriers import (
    BarrierParams,
    barrier_check,
    comparison_functions,
    homogeneous_residual,
    decay_radius,
    comparison_gamma,
    make_barrier_params,
    solve_comparison_problem,
)
from choquard_lsr.errors import AdmissibilityError
from choquard_lsr.fields import Box3, EpsilonContext, TruncationParams
from choquard_lsr.potentials import make_potential


def test_alpha_two_power_laws():
    pair = comparison_functions(BarrierParams(2.0, 2.0, 1.0))
    r = np.geomspace(0.5, 50.0, 30)
    assert np.allclose(pair.u1(r), r**-2.0, rtol=1e-14)
    assert np.allclose(pair.u2(r), r, rtol=1e-14)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_homogeneous_residual_and_wronskian(alpha):
    R = 2.0
    pair = comparison_functions(BarrierParams(1.0, alpha, R))
    r = np.linspace(R, 20 * R, 300)
    assert homogeneous_residual(pair, r).max() < 1e-8 * np.abs(pair.v1(r)).max()
    w = pair.wronskian(r)
    assert np.ptp(w) <= 1e-8 * abs(w[0])
    assert np.all(np.diff(pair.u1(r)) < 0) and np.all(np.diff(pair.u2(r)) > 0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_large_r_asymptotics(alpha):
    m = 1.0
    pair = comparison_functions(BarrierParams(m, alpha, 1.0))
    c, p = 2 * np.sqrt(m) / (2 - alpha), (2 - alpha) / 2
    r = np.array([200.0, 400.0, 800.0])
    lv1, _ = pair.log_v(r)
    scaled = np.exp(lv1 + c * r**p - (alpha / 4) * np.log(r))
    assert abs(scaled[-1] / scaled[-2] - 1) < abs(scaled[-2] / scaled[0] - 1) + 1e-3
    assert abs(scaled[-1] / scaled[-2] - 1) < 2e-2


def test_gamma_without_source_is_reciprocal_u1():
    bp = BarrierParams(1.0, 1.0, 2.0)
    g = comparison_gamma(bp, f=lambda r: np.zeros_like(r))
    assert g == pytest.approx(1.0 / comparison_functions(bp).u1(np.array([2.0]))[0], rel=1e-10)


def test_linearity_in_source():
    bp = BarrierParams(1.0, 1.0, 2.0)
    r, phi0, _ = solve_comparison_problem(bp, f=lambda r: np.zeros_like(r))
    _, phi1, _ = solve_comparison_problem(bp)
    _, phi2, _ = solve_comparison_problem(bp, f=lambda r: 2 * np.exp(-r))
    assert np.allclose(phi2 - phi0, 2 * (phi1 - phi0), rtol=1e-8, atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(st.floats(1.0, 3.0))
def test_gamma_monotone_in_source(k):
    bp = BarrierParams(1.0, 1.0, 2.0)
    assert comparison_gamma(bp, f=lambda r: k * np.exp(-r)) >= comparison_gamma(bp) - 1e-12


def test_comparison_solution_matches_collocation():
    bp = BarrierParams(1.0, 1.0, 2.0)
    r, phi, ratio = solve_comparison_problem(bp)
    pair = comparison_functions(bp)
    assert np.all(phi <= ratio.max() * pair.u1(r) * (1 + 1e-10))
    # oracle: -(v)'' + m r^{-1} v = r e^{-r}, v(2) = 2, v(Rf) = tiny, on a finite interval
    Rf = 40.0
    x = np.linspace(2.0, Rf, 2000)

    def rhs(x, y):
        return np.vstack([y[1], bp.m * x ** (-bp.alpha) * y[0] - x * np.exp(-x)])

    v_end = np.interp(Rf, r, phi) * Rf
    sol = solve_bvp(rhs, lambda a, b: np.array([a[0] - 2.0, b[0] - v_end]), x,
                    np.vstack([2 * np.exp(-(x - 2)), -2 * np.exp(-(x - 2))]), tol=1e-9, max_nodes=100000)
    assert sol.success
    inside = r <= 20.0
    assert np.allclose(sol.sol(r[inside])[0] / r[inside], phi[inside], rtol=1e-6)


def test_decay_radius_on_exact_decay_and_constant():
    V = make_potential("pure_decay", scale=1.0)
    R = decay_radius(V, V.A0 / 4, 0.2)
    assert np.isfinite(R)
    rng = np.random.default_rng(1)
    d = rng.normal(size=(10000, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x = d * rng.uniform(R, 10 * R, size=(10000, 1))
    y = rng.normal(size=(10000, 3))
    y /= np.maximum(1.0, np.linalg.norm(y, axis=1, keepdims=True))
    for eps in (0.2, 0.1, 0.05):
        assert np.all(V(eps * x + y) >= V.A0 / 4 * np.linalg.norm(x, axis=1) ** -V.alpha)
    assert decay_radius(make_potential("constant"), 0.4, 0.2) == 1.0
    with pytest.raises(AdmissibilityError):
        decay_radius(V, V.A0, 0.2)


def test_barrier_check_trivial_cases():
    V = make_potential("min_bump")
    ctx = EpsilonContext(0.05, V, TruncationParams.default(V, 1.0))
    bp = make_barrier_params(V, 0.2)
    box = Box3((0.0, 0.0, 0.0), 8.0, 32)
    rep = barrier_check(box.zeros(), np.zeros(3), ctx, bp)
    assert rep.passed and rep.worst_margin == pytest.approx(np.sqrt(0.05))
    w = box.field(np.full(box.shape, 2 * np.sqrt(0.05)))
    rep = barrier_check(w, np.zeros(3), ctx, bp)
    assert not rep.passed and rep.inner_margin == pytest.approx(-np.sqrt(0.05))


def test_params_validation():
    with pytest.raises(ValueError):
        BarrierParams(1.0, 2.5, 1.0)
    with pytest.raises(ValueError):
        BarrierParams(-1.0, 1.0, 1.0)
