import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_bvp

from choquard_lsr.radial import (
    RadialGrid,
    evaluate_profile,
    evaluate_profile_derivative,
    linearized_spectrum,
    radial_newton_potential,
    residual,
    residual_report,
    scale_profile,
    solve_ground_state,
)


def bvp_ground_state_peak(R=30.0):
    """Independent oracle: collocation BVP for (U, U', Phi, Phi') with a sech start."""
    r = np.linspace(1e-6, R, 3000)

    def rhs(r, y):
        U, dU, P, dP = y
        return np.vstack([dU, -2 * dU / r + U - P * U, dP, -2 * dP / r - U * U])

    def bc(ya, yb):
        return np.array([ya[1], ya[3], yb[0], yb[3] + yb[2] / R])

    guess = np.vstack([1 / np.cosh(r), -np.tanh(r) / np.cosh(r), 3 / np.sqrt(1 + r * r),
                       -3 * r / (1 + r * r) ** 1.5])
    sol = solve_bvp(rhs, bc, r, guess, tol=1e-6, max_nodes=200000)
    assert sol.success
    return float(sol.sol(0.0)[0])


def test_peak_matches_collocation_oracle(profile):
    assert profile.peak == pytest.approx(bvp_ground_state_peak(), rel=1e-6)


def test_residuals_small(profile):
    rep = residual_report(profile)
    assert rep["u_equation"] <= 1e-8
    assert rep["phi_equation"] <= 1e-8
    assert residual(profile) == rep["u_equation"]


def test_positive_decreasing_exponential_tail(profile):
    assert profile.is_monotone()
    A, kappa, beta = profile.tail
    assert abs(kappa - 1.0) < 0.05
    r = np.array([35.0, 40.0, 45.0, 60.0])
    v = evaluate_profile(profile, r)
    assert np.all(np.diff(v) < 0) and np.all(v > 0)
    # the tail matches the table at the seam
    rm = profile.grid.r_max
    assert evaluate_profile(profile, np.array([rm * (1 + 1e-12)]))[0] == pytest.approx(profile.values[-1], rel=1e-9)


def test_grid_preconditions():
    with pytest.raises(ValueError):
        solve_ground_state(RadialGrid(20.0, 4000))
    with pytest.raises(ValueError):
        solve_ground_state(RadialGrid(40.0, 500))
    with pytest.raises(ValueError):
        solve_ground_state(RadialGrid(40.0, 4000), tol=1e-16)


def test_refinement_consistency(profile):
    coarse = solve_ground_state(RadialGrid(40.0, 2000), tol=1e-7)
    assert coarse.peak == pytest.approx(profile.peak, rel=1e-5)


def test_newton_potential_of_gaussian():
    g = RadialGrid(20.0, 4001)
    r = g.nodes
    rho = np.exp(-r * r / 2) / (2 * np.pi) ** 1.5
    from scipy.special import erf

    exact = np.empty_like(r)
    exact[1:] = erf(r[1:] / np.sqrt(2)) / (4 * np.pi * r[1:])
    exact[0] = np.sqrt(2 / np.pi) / (4 * np.pi)
    assert np.max(np.abs(radial_newton_potential(rho, g) - exact)) < 1e-10


def test_derivative_consistent(profile):
    r = np.linspace(0.5, 39.0, 50)
    h = 1e-5
    fd = (evaluate_profile(profile, r + h) - evaluate_profile(profile, r - h)) / (2 * h)
    assert np.allclose(fd, evaluate_profile_derivative(profile, r), atol=1e-7)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 5.0))
def test_scaled_profiles_solve_scaled_equation(profile, a):
    q = scale_profile(profile, a)
    assert q.a == pytest.approx(a)
    assert residual(q) <= 1e-7 * max(1.0, a**2)
    assert q.peak == pytest.approx(a * profile.peak)


def test_scaling_rejects_nonpositive(profile):
    with pytest.raises(ValueError):
        scale_profile(profile, 0.0)


def test_spectrum_structure(profile):
    sectors = linearized_spectrum(profile, ell_max=2, k=3, r_cut=25.0)
    ev = {s.ell: s.eigenvalues for s in sectors}
    assert np.count_nonzero(ev[0] < 0) == 1 and ev[0][1] > 0
    assert abs(ev[1][0]) < 1e-4 and ev[1][1] > 0
    assert np.all(ev[2] > 0)


def test_spectrum_arguments(profile):
    with pytest.raises(ValueError):
        linearized_spectrum(profile, ell_max=1)
