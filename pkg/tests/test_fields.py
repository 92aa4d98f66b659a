import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from choquard_lsr.checks import gaussian_convolution_error, radial_convolution_error
from choquard_lsr.errors import BoxError, TruncationActiveError
from choquard_lsr.fields import (
    Box3,
    EpsilonContext,
    ScalarField3,
    TruncationParams,
    coulomb_convolve,
    e_norm,
    energy,
    gradient,
    hessian_action,
    hls_verify,
    neg_laplacian,
    solve_weighted,
    transition,
    truncate,
    weighted_inner,
)
from choquard_lsr.potentials import make_potential

BOX = Box3((0.0, 0.0, 0.0), 8.0, 32)
V = make_potential("min_bump")
CTX = EpsilonContext(0.1, V, TruncationParams(8.0, 1.0))


def bump(box, c=(0.0, 0.0, 0.0), s=1.0, amp=1.0):
    return box.field(amp * np.exp(-np.sum((box.points - np.asarray(c)) ** 2, axis=-1) / (2 * s * s)))


def random_smooth(box, rng):
    out = box.zeros()
    for _ in range(3):
        out = out + bump(box, rng.uniform(-2, 2, 3), rng.uniform(0.8, 1.5), rng.uniform(-0.5, 0.5))
    return out


def test_box_validation():
    with pytest.raises((ValueError, BoxError)):
        Box3((0.0, 0.0, 0.0), 8.0, 48)
    with pytest.raises((ValueError, BoxError)):
        BOX.zeros() + Box3((1.0, 0.0, 0.0), 8.0, 32).zeros()


def test_gaussian_convolution_accuracy():
    assert gaussian_convolution_error(64) <= 1e-6


def test_radial_inputs_agree_with_radial_potential(profile):
    assert radial_convolution_error(profile) <= 1e-5


def test_cell_average_kernel_is_coarser():
    rho = bump(BOX)
    a = coulomb_convolve(rho).values
    b = coulomb_convolve(rho, kernel="cell_average").values
    assert 1e-6 < np.abs(a - b).max() / np.abs(a).max() < 1e-2


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_convolution_symmetric_and_positive(seed):
    rng = np.random.default_rng(seed)
    rho = BOX.field(np.abs(random_smooth(BOX, rng).values))
    sig = BOX.field(np.abs(random_smooth(BOX, rng).values))
    a = coulomb_convolve(rho).l2_inner(sig)
    b = coulomb_convolve(sig).l2_inner(rho)
    assert a == pytest.approx(b, rel=1e-10)
    assert coulomb_convolve(rho).values.min() >= 0


def test_laplacian_of_gaussian():
    box = Box3((0.0, 0.0, 0.0), 10.0, 64)
    g = bump(box)
    r2 = np.sum(box.points**2, axis=-1)
    exact = (3.0 - r2) * g.values
    assert np.abs(neg_laplacian(g).values - exact).max() < 1e-9


def test_weighted_solve_inverts_B():
    rng = np.random.default_rng(1)
    rhs = random_smooth(BOX, rng).values
    g = BOX.field(solve_weighted(rhs, BOX, CTX, 1e-12))
    for _ in range(3):
        v = random_smooth(BOX, rng)
        assert weighted_inner(g, v, CTX) == pytest.approx(float(np.sum(rhs * v.values) * BOX.cell_volume),
                                                          rel=1e-8, abs=1e-12)


def test_energy_gradient_consistency():
    rng = np.random.default_rng(2)
    for _ in range(20):
        u = bump(BOX, amp=0.6) + random_smooth(BOX, rng) * 0.2
        v = random_smooth(BOX, rng)
        t = 1e-4
        fd = (energy(u + v * t, CTX) - energy(u - v * t, CTX)) / (2 * t)
        action, _ = gradient(u, CTX)
        assert fd == pytest.approx(action(v), rel=1e-6, abs=1e-10)


def test_hessian_symmetric_and_matches_gradient_differences():
    rng = np.random.default_rng(3)
    u = bump(BOX, amp=0.8)
    v, w = random_smooth(BOX, rng), random_smooth(BOX, rng)
    hv, hw = hessian_action(u, v, CTX), hessian_action(u, w, CTX)
    assert abs(hv(w) - hw(v)) < 1e-10 * e_norm(v, CTX) * e_norm(w, CTX)
    t = 1e-4
    gp, _ = gradient(u + v * t, CTX)
    gm, _ = gradient(u - v * t, CTX)
    diff = ScalarField3(BOX, (gp.density.values - gm.density.values) / (2 * t) - hv.density.values)
    from choquard_lsr.fields import FunctionalAction

    assert FunctionalAction(diff, CTX).dual_norm < 1e-5


def test_constant_potential_ground_state_is_critical(profile):
    from choquard_lsr.radial import evaluate_profile

    box = Box3((0.0, 0.0, 0.0), 16.0, 64)
    ctx = EpsilonContext(0.1, make_potential("constant", value=1.0), TruncationParams(8.0, 1.0))
    r = np.linalg.norm(box.points, axis=-1)
    u = box.field(evaluate_profile(profile, r.ravel()).reshape(r.shape))
    _, g = gradient(u, ctx)
    assert e_norm(g, ctx) <= 1e-4 * e_norm(u, ctx)


def test_truncation_identity_and_idempotence():
    u = bump(BOX, amp=1.0)
    out, active = truncate(u, CTX)
    assert not active and out is u
    again, active2 = truncate(out, CTX)
    assert not active2 and np.array_equal(again.values, out.values)
    big = bump(BOX, amp=20.0)
    cut, active = truncate(big, CTX)
    assert active and cut.max_abs() < big.max_abs()
    with pytest.raises(TruncationActiveError):
        gradient(big, CTX)


def test_transition_profile():
    s = np.linspace(0, 3, 301)
    t = transition(s)
    assert np.all(t[s <= 1] == 1) and np.all(t[s >= 2] == 0) and np.all(np.diff(t) <= 0)


def test_hls_translation_and_scaling():
    box = Box3((0.0, 0.0, 0.0), 12.0, 64)
    f = bump(box, s=1.5)
    base = hls_verify(f, f)
    for shift in ([1.0, 0, 0], [0, 2.0, 1.0], [3.0, 0, 0]):
        assert hls_verify(f, bump(box, shift, s=1.5)) <= base + 1e-12
    r2 = np.sum(box.points**2, axis=-1)
    for lam in (0.5, 2.0):
        g = box.field(lam**2.5 * np.exp(-lam * lam * r2 / (2 * 1.5**2)))
        assert hls_verify(g, g) == pytest.approx(base, rel=1e-3)
    with pytest.raises(ValueError):
        hls_verify(box.zeros(), f)
