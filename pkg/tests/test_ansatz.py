import numpy as np
import pytest

from choquard_lsr.ansatz import (
    build_ansatz,
    coercivity_probe,
    project_extended,
    project_orthogonal,
    quasi_solution_norm,
    _probe_field,
)
from choquard_lsr.errors import AdmissibilityError, BoxError
from choquard_lsr.fields import Box3, weighted_inner

from conftest import make_ctx


def test_tangents_are_xi_derivatives(profile, probe_setup):
    ap = probe_setup
    h = 1e-4
    for j in range(3):
        d = np.zeros(3)
        d[j] = h
        zp = build_ansatz(profile, ap.xi + d, ap.ctx, ap.box).z
        zm = build_ansatz(profile, ap.xi - d, ap.ctx, ap.box).z
        fd = (zp.values - zm.values) / (2 * h)
        assert np.abs(fd - ap.tangents[j].values).max() < 1e-6 * np.abs(ap.tangents[j].values).max() + 1e-7


def test_projection_orthogonal_and_idempotent(probe_setup):
    ap = probe_setup
    v = _probe_field(ap, np.random.default_rng(0))
    pv = project_orthogonal(v, ap)
    n = np.sqrt(weighted_inner(pv, pv, ap.ctx))
    assert np.max(np.abs(ap.tangent_products(pv))) <= 1e-8 * n
    ppv = project_orthogonal(pv, ap)
    assert np.abs(ppv.values - pv.values).max() <= 1e-10 * np.abs(pv.values).max()
    ev = project_extended(v, ap)
    prods = [weighted_inner(ev, e, ap.ctx) for e in (ap.z,) + tuple(ap.tangents)]
    assert np.max(np.abs(prods)) <= 1e-8 * np.sqrt(weighted_inner(ev, ev, ap.ctx))


def test_admissibility_and_box_errors(profile, min_bump):
    ctx = make_ctx(min_bump, 0.1, profile)
    with pytest.raises(AdmissibilityError):
        build_ansatz(profile, [10.5, 0, 0], ctx, Box3((10.5, 0.0, 0.0), 16.0, 64))
    with pytest.raises(BoxError):
        build_ansatz(profile, [0, 0, 0], ctx, Box3((0.0, 0.0, 0.0), 6.0, 32))


def test_quasi_solution_norm_scales_with_eps(profile, min_bump):
    x = np.array([0.7, 0.0, 0.0])
    norms = []
    for eps in (0.1, 0.05):
        ctx = make_ctx(min_bump, eps, profile)
        ap = build_ansatz(profile, x / eps, ctx, Box3(tuple(x / eps), 16.0, 64))
        norms.append(quasi_solution_norm(ap))
    assert 0.35 < norms[1] / norms[0] < 0.65


def test_coercivity_sign_structure(probe_setup):
    rep = coercivity_probe(probe_setup, samples=20, seed=1)
    assert rep.neg_ray < 0 < rep.min_pos_ray
    with pytest.raises(ValueError):
        coercivity_probe(probe_setup, samples=5)
