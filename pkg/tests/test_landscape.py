import numpy as np
import pytest

from choquard_lsr.fields import Box3, coulomb_convolve
from choquard_lsr.landscape import (
    ReducedSample,
    brouwer_index,
    energy_constant_D,
    find_critical_points,
    make_lattice,
)
from choquard_lsr.potentials import make_potential
from choquard_lsr.radial import evaluate_profile, scale_profile


def test_energy_constant_positive_and_scales(profile):
    D = energy_constant_D(profile)
    assert D > 0
    # U_a(r) = a U(sqrt(a) r) gives D_a = a^{3/2} D
    for a in (0.25, 4.0):
        assert energy_constant_D(scale_profile(profile, a)) == pytest.approx(a**1.5 * D, rel=1e-8)


def test_energy_constant_matches_grid_quadrature(profile):
    box = Box3((0.0, 0.0, 0.0), 16.0, 64)
    r = box.distance_from(np.zeros(3))
    rho = box.field(evaluate_profile(profile, r.ravel()).reshape(r.shape) ** 2)
    D3 = float(np.sum(coulomb_convolve(rho).values * rho.values) * box.cell_volume)
    assert D3 == pytest.approx(energy_constant_D(profile), rel=1e-3)


@pytest.mark.parametrize("diag,expected", [((1, 1, 1), 1), ((-1, -1, -1), -1), ((1, 1, -1), -1),
                                           ((1, -1, -1), 1)])
def test_brouwer_index_of_linear_fields(diag, expected):
    d = np.array(diag, dtype=float)
    assert brouwer_index(lambda x: x * d, np.zeros(3), 0.3) == expected


def test_brouwer_index_of_bump_potentials():
    assert brouwer_index(make_potential("min_bump").gradient, np.zeros(3), 0.1) == 1
    assert brouwer_index(make_potential("max_bump").gradient, np.zeros(3), 0.1) == -1
    # no zero inside: degree 0
    assert brouwer_index(make_potential("min_bump").gradient, np.array([0.6, 0, 0]), 0.1) == 0


def synthetic(fun, count=5, h=1.0):
    lat = make_lattice(np.zeros(3), count, h)
    return [ReducedSample(x, float(fun(x)), float(fun(x)), 0.0) for x in lat]


def test_critical_point_of_quadratic():
    c = np.array([0.2, -0.1, 0.3])
    samples = synthetic(lambda x: np.sum((x - c) ** 2))
    crit = find_critical_points(samples, 1.0, make_potential("min_bump"), 0.05)
    assert len(crit) == 1
    assert np.allclose(crit[0].xi, 0.0)
    assert crit[0].kind == "min" and crit[0].brouwer_index == 1
    assert np.allclose(crit[0].hessian_eigs, 2.0)


def test_saddle_classified():
    samples = synthetic(lambda x: x[0] ** 2 + x[1] ** 2 - x[2] ** 2)
    crit = find_critical_points(samples, 1.0, make_potential("min_bump"), 0.05)
    assert [c.kind for c in crit] == ["saddle"]


def test_monotone_landscape_has_no_critical_points():
    samples = synthetic(lambda x: 0.3 * x[0] + np.sum(x**2) * 0.01)
    assert find_critical_points(samples, 1.0, make_potential("pure_decay"), 0.05) == []


def test_failed_samples_are_skipped():
    samples = synthetic(lambda x: np.sum(x**2))
    bad = samples[0]
    samples[0] = ReducedSample(bad.xi, np.nan, np.nan, np.nan, error="diverged")
    assert len(find_critical_points(samples, 1.0, make_potential("min_bump"), 0.05)) == 1


def test_lattice_validation():
    lat = make_lattice([1.0, 2.0, 3.0], 3, 0.5)
    assert lat.shape == (27, 3)
    assert np.allclose(lat.mean(axis=0), [1, 2, 3])
    with pytest.raises(ValueError):
        make_lattice(np.zeros(3), 4, 1.0)
    with pytest.raises(ValueError):
        make_lattice(np.zeros(3), 3, 0.0)
