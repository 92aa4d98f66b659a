import numpy as np
import pytest

from choquard_lsr.ansatz import _probe_field, build_ansatz, project_orthogonal
from choquard_lsr.barriers import make_barrier_params
from choquard_lsr.fields import Box3, weighted_inner
from choquard_lsr.potentials import make_potential
from choquard_lsr.reduction import (
    InnerSystem,
    SolveParams,
    apply_S,
    estimate_contraction,
    full_residual,
    s_difference,
    solve_auxiliary,
)

from conftest import make_ctx


def enorm(v, ctx):
    return np.sqrt(weighted_inner(v, v, ctx))


@pytest.fixture(scope="module")
def params(min_bump):
    return SolveParams(c0=2.5, barrier=make_barrier_params(min_bump, 0.2))


@pytest.fixture(scope="module")
def solved(probe_setup, params):
    system = InnerSystem(probe_setup, params.lin_tol, params.max_inner)
    return system, solve_auxiliary(probe_setup, params=params, system=system)


def test_inner_operator_symmetric(probe_setup, solved):
    system, _ = solved
    rng = np.random.default_rng(0)
    v = _probe_field(probe_setup, rng).values.ravel()
    w = _probe_field(probe_setup, rng).values.ravel()
    av, aw = system._matvec(v), system._matvec(w)
    scale = np.linalg.norm(v) * np.linalg.norm(w) * np.abs(av).max() / np.abs(v).max()
    assert abs(av @ w - aw @ v) <= 1e-9 * scale


def test_fixed_point_properties(probe_setup, params, solved):
    system, res = solved
    ap = probe_setup
    assert res.iterations <= 10 and res.in_gamma and res.norm_ok
    assert res.barrier_report.passed
    assert res.orthogonality <= 1e-8
    again = apply_S(res.w, ap, params=params, system=system)
    assert enorm(again - res.w, ap.ctx) <= params.absolute_fp_tol(ap.eps)
    steps = np.array(res.step_norms)
    assert np.all(steps[1:] <= steps[:-1] * max(res.contraction_est, 1e-12) * (1 + 1e-9))


def test_first_step_bounded_by_quasi_norm(probe_setup, params, solved):
    from choquard_lsr.ansatz import quasi_solution_norm

    system, _ = solved
    s0 = apply_S(probe_setup.box.zeros(), probe_setup, params=params, system=system)
    assert enorm(s0, probe_setup.ctx) <= 3.0 * quasi_solution_norm(probe_setup)


def test_difference_form_matches_direct_route(probe_setup, params, solved):
    system, res = solved
    ap = probe_setup
    rng = np.random.default_rng(4)
    d = project_orthogonal(_probe_field(ap, rng), ap)
    d = d * (0.1 * ap.eps / enorm(d, ap.ctx))
    w1, w2 = res.w + d, res.w
    direct = apply_S(w1, ap, params=params, system=system) - apply_S(w2, ap, params=params, system=system)
    via = s_difference(system, w1, w2)
    assert enorm(direct - via, ap.ctx) <= 1e-6 * enorm(via, ap.ctx) + 1e-10


def test_contraction_estimate_and_degenerate_pairs(probe_setup, params, solved):
    system, res = solved
    ce = estimate_contraction(probe_setup, params=params, pairs=5, w_star=res.w, system=system)
    assert 0 < ce.estimate < 0.5
    assert len(ce.ratios) == 5
    with pytest.raises(ValueError):
        estimate_contraction(probe_setup, params=params, pairs=3)


def test_uniqueness_from_random_start(probe_setup, params, solved):
    system, res = solved
    ap = probe_setup
    v = project_orthogonal(_probe_field(ap, np.random.default_rng(9)), ap)
    v = v * (0.5 * params.c0 * ap.eps / enorm(v, ap.ctx))
    other = solve_auxiliary(ap, params=params, w0=v, system=system)
    assert enorm(other.w - res.w, ap.ctx) <= 10 * params.absolute_fp_tol(ap.eps)


def test_full_residual_reports(probe_setup, solved):
    _, res = solved
    rep = full_residual(probe_setup.z + res.w, probe_setup.ctx)
    assert rep.admissible and rep.positive
    # only the tangential part of the gradient survives
    assert rep.dual_norm < full_residual(probe_setup.z, probe_setup.ctx).dual_norm


def test_constant_potential_has_zero_correction(profile):
    V = make_potential("constant", value=1.0)
    ctx = make_ctx(V, 0.05, profile)
    ap = build_ansatz(profile, np.zeros(3), ctx, Box3((0.0, 0.0, 0.0), 16.0, 64))
    prm = SolveParams(c0=2.5)
    s0 = apply_S(ap.box.zeros(), ap, params=prm)
    assert enorm(s0, ctx) <= 1e-4
    res = solve_auxiliary(ap, params=prm)
    assert res.norm_E <= 10 * prm.absolute_fp_tol(ap.eps)


def test_params_validation():
    with pytest.raises(ValueError):
        SolveParams(c0=-1.0)
    with pytest.raises(ValueError):
        SolveParams(fp_tol=0.5)
