import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from choquard_lsr.errors import PotentialSpecError
from choquard_lsr.potentials import FAMILIES, make_potential

points = st.lists(st.floats(-6, 6), min_size=3, max_size=3).map(np.array)


@pytest.mark.parametrize("family", FAMILIES)
def test_bounds_hold_on_random_points(family):
    V = make_potential(family)
    x = np.random.default_rng(3).normal(scale=8.0, size=(2000, 3))
    assert V.bounds_violation(x) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(points)
def test_gradient_matches_differences(x):
    for fam in ("min_bump", "max_bump", "pure_decay"):
        V = make_potential(fam)
        h = 1e-6
        fd = np.array([(V(x + h * e) - V(x - h * e)) / (2 * h) for e in np.eye(3)])
        assert np.allclose(V.gradient(x), fd, atol=1e-8)


def test_bump_extrema_at_x0():
    for fam, sign in (("min_bump", 1), ("max_bump", -1)):
        V = make_potential(fam, x0=(0.1, 0.0, -0.2))
        x0 = V.x0
        assert np.linalg.norm(V.gradient(x0)) < 1e-14
        assert np.all(sign * np.linalg.eigvalsh(V.hessian(x0)) > 0)


def test_alpha_out_of_range_rejected():
    with pytest.raises(PotentialSpecError):
        make_potential("min_bump", alpha=2.5)
    with pytest.raises(PotentialSpecError):
        make_potential("min_bump", bogus=1.0)
    with pytest.raises(PotentialSpecError):
        make_potential("nope")
    with pytest.raises(PotentialSpecError):
        make_potential("max_bump", b=1.5)


def test_scaled_multiplies_amplitude():
    V = make_potential("min_bump")
    W = V.scaled(3.0)
    x = np.random.default_rng(0).normal(size=(20, 3))
    assert np.allclose(W(x), 3.0 * V(x))
    assert W.A0 == pytest.approx(3.0 * V.A0)


def test_specs_hashable_and_equal():
    a = make_potential("min_bump", b=0.4)
    b = make_potential("min_bump", b=0.4)
    assert a == b and hash(a) == hash(b)
    assert make_potential("constant").V1 == 0.0
