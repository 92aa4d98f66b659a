"""The concentration ansatz z_{eps,xi}, its tangent space and projections.

``z(x) = a U(sqrt(a) |x - xi|)`` with ``a = V(eps xi)`` solves the limiting
problem frozen at ``xi``; the tangent vectors are the exact derivatives
``t_j = dz/dxi_j``, including the terms coming from ``a`` depending on ``xi``.
Orthogonality is measured in the E-inner product.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import AdmissibilityError, BoxError, DegenerateGramError
from .fields import (
    Box3,
    EpsilonContext,
    ScalarField3,
    _apply_B,
    _convolve,
    box_is_adequate,
    gradient,
    hessian_density,
    truncate,
    weighted_inner,
)
from .radial import RadialProfile, evaluate_profile, evaluate_profile_derivative

__all__ = [
    "AnsatzPoint",
    "build_ansatz",
    "project_orthogonal",
    "project_extended",
    "quasi_solution_norm",
    "coercivity_probe",
    "rayleigh_quotient",
    "CoercivityReport",
]

MAX_GRAM_CONDITION = 1e6


@dataclass(frozen=True, eq=False)
class AnsatzPoint:
    """Ansatz data at one ``xi``.

    ``images[j]`` is the L^2 density ``(-Delta + V(eps x)) t_j``, so that
    ``<v, t_j>_E = int v images[j]`` costs one dot product.
    """

    xi: np.ndarray
    eps: float
    a: float
    z: ScalarField3
    tangents: tuple
    images: tuple
    gram: np.ndarray
    ctx: EpsilonContext
    profile: RadialProfile
    extended_basis_flag: bool = False

    @property
    def box(self) -> Box3:
        return self.z.box

    def tangent_products(self, v: ScalarField3) -> np.ndarray:
        """``(<v, t_j>_E)_j``."""
        dv = self.box.cell_volume
        return np.array([float(np.vdot(v.values, s) * dv) for s in self.images])

    @cached_property
    def z_image(self) -> np.ndarray:
        return _apply_B(self.z.values, self.box, self.ctx.potential_on(self.box))

    @cached_property
    def coulomb_z(self) -> np.ndarray:
        """``W * z^2`` on the box."""
        return _convolve(self.z.values**2, self.box)

    @cached_property
    def extended_gram(self) -> np.ndarray:
        basis = (self.z,) + tuple(self.tangents)
        G = np.array([[weighted_inner(u, v, self.ctx) for v in basis] for u in basis])
        return 0.5 * (G + G.T)


def _unit_offsets(box: Box3, xi: np.ndarray):
    diff = box.points - xi
    rho = np.linalg.norm(diff, axis=-1)
    return diff, rho


def build_ansatz(p: RadialProfile, xi, ctx: EpsilonContext, box: Box3,
                 decay_lengths: float = 12.0) -> AnsatzPoint:
    """Sample ``z_{eps,xi}`` and its tangents on ``box``.

    Parameters
    ----------
    p : RadialProfile
        Ground state of the limiting problem with ``a = 1``.
    xi : array_like
        Concentration point in the fast variable; requires ``|eps xi| < 1``.
    decay_lengths : float
        Box adequacy: ``L >= |xi - center|_inf + decay_lengths / sqrt(a)``.

    Raises
    ------
    AdmissibilityError
        ``|eps xi| >= 1`` or ``V(eps xi) < A0/2``.
    BoxError
        The box is too small for the decay of ``z``.
    DegenerateGramError
        Tangent Gram matrix singular or with condition number above 1e6.
    """
    if p.a != 1.0:
        raise ValueError("build_ansatz expects the unscaled ground state")
    xi = np.asarray(xi, dtype=float).reshape(3)
    eps = ctx.eps
    V = ctx.potential
    slow = eps * xi
    if np.linalg.norm(slow) >= 1.0:
        raise AdmissibilityError(f"|eps xi| = {np.linalg.norm(slow):.4g} must be < 1")
    a = float(V(slow))
    if a < V.A0 / 2.0:
        raise AdmissibilityError(f"V(eps xi) = {a:.4g} is below A0/2 = {V.A0 / 2:.4g}")
    if not box_is_adequate(box, xi, a, decay_lengths):
        raise BoxError(
            f"box half-width {box.L} too small for xi = {xi.tolist()} and a = {a:.4g}"
        )
    diff, rho = _unit_offsets(box, xi)
    sa = np.sqrt(a)
    s = (sa * rho).ravel()
    U = evaluate_profile(p, s).reshape(rho.shape)
    dU = evaluate_profile_derivative(p, s).reshape(rho.shape)
    # U'(s)/s, continuous at the origin with value U''(0)
    with np.errstate(invalid="ignore", divide="ignore"):
        dU_over_s = np.where(rho > 0, dU / (sa * rho), float(p._spline(0.0, 2)))
    z = box.field(a * U)
    grad_v = V.gradient(slow)
    da_part = U + 0.5 * sa * rho * dU
    tangents = []
    for j in range(3):
        # d/dxi_j of a U(sqrt(a) |x - xi|)
        t = eps * grad_v[j] * da_part - a * a * dU_over_s * diff[..., j]
        tangents.append(box.field(t))
    Vbox = ctx.potential_on(box)
    images = tuple(_apply_B(t.values, box, Vbox) for t in tangents)
    G = np.array([[weighted_inner(u, v, ctx) for v in tangents] for u in tangents])
    G = 0.5 * (G + G.T)
    w = np.linalg.eigvalsh(G)
    if w[0] <= 0 or w[-1] / w[0] > MAX_GRAM_CONDITION:
        raise DegenerateGramError(f"tangent Gram matrix has eigenvalues {w}")
    return AnsatzPoint(xi, eps, a, z, tuple(tangents), images, G, ctx, p)


def project_orthogonal(v: ScalarField3, ap: AnsatzPoint, passes: int = 2) -> ScalarField3:
    """E-orthogonal projection of ``v`` onto the complement of the tangent space."""
    out = v.values
    G = ap.gram
    for _ in range(passes):
        c = np.linalg.solve(G, ap.tangent_products(ScalarField3(ap.box, out)))
        out = out - sum(cj * t.values for cj, t in zip(c, ap.tangents))
    return ScalarField3(ap.box, out)


def project_extended(v: ScalarField3, ap: AnsatzPoint, passes: int = 2) -> ScalarField3:
    """E-orthogonal projection onto the complement of ``X = span{z, t_1, t_2, t_3}``."""
    basis = (ap.z,) + tuple(ap.tangents)
    dv = ap.box.cell_volume
    images = (ap.z_image,) + tuple(ap.images)
    out = v.values
    for _ in range(passes):
        b = np.array([float(np.vdot(out, s) * dv) for s in images])
        c = np.linalg.solve(ap.extended_gram, b)
        out = out - sum(cj * e.values for cj, e in zip(c, basis))
    return ScalarField3(ap.box, out)


def quasi_solution_norm(ap: AnsatzPoint, ctx: EpsilonContext | None = None,
                        lin_tol: float = 1e-10) -> float:
    """Dual norm ``|grad I_eps(z)|`` (the E-norm of the gradient's representer)."""
    action, _ = gradient(ap.z, ctx or ap.ctx, lin_tol)
    return action.dual_norm


def rayleigh_quotient(ap: AnsatzPoint, v: ScalarField3) -> float:
    """``<I''(z) v, v> / |v|_E^2``."""
    dens = hessian_density(ap.z, v, ap.ctx, ap.coulomb_z)
    num = float(np.vdot(dens, v.values) * ap.box.cell_volume)
    return num / weighted_inner(v, v, ap.ctx)


def _probe_field(ap: AnsatzPoint, rng: np.random.Generator) -> ScalarField3:
    """Smoothed white noise under a Gaussian envelope of width ``3/sqrt(a)`` around ``xi``."""
    box = ap.box
    noise = rng.standard_normal(box.shape)
    # smooth on the scale of the ground state so the probe is resolved
    k = 2.0 * np.pi * sfft.fftfreq(box.n, d=box.h)
    kz = 2.0 * np.pi * sfft.rfftfreq(box.n, d=box.h)
    ksq = k[:, None, None] ** 2 + k[None, :, None] ** 2 + kz[None, None, :] ** 2
    ell = 0.5 / np.sqrt(ap.a)
    smooth = sfft.irfftn(sfft.rfftn(noise) * np.exp(-0.5 * ksq * ell * ell), s=box.shape)
    width = 3.0 / np.sqrt(ap.a)
    env = np.exp(-0.5 * (box.distance_from(ap.xi) / width) ** 2)
    return box.field(smooth * env)


@dataclass(frozen=True)
class CoercivityReport:
    """Rayleigh quotients of ``I''(z)``: along ``z``, the minimum over projected probes, along ``t_1``."""

    neg_ray: float
    min_pos_ray: float
    tangent_ray: float
    samples: int

    def as_dict(self) -> dict:
        return dict(neg_ray=self.neg_ray, min_pos_ray=self.min_pos_ray,
                    tangent_ray=self.tangent_ray, samples=self.samples)


def coercivity_probe(ap: AnsatzPoint, ctx: EpsilonContext | None = None, samples: int = 50,
                     seed: int = 0) -> CoercivityReport:
    """Sign structure of the second derivative at ``z``.

    ``neg_ray`` is the quotient at ``v = z``; ``min_pos_ray`` the minimum over
    ``samples`` seeded random localized fields projected off ``X``.
    """
    if samples < 20:
        raise ValueError("coercivity probe needs at least 20 samples")
    if ctx is not None and ctx != ap.ctx:
        raise ValueError("context differs from the one the ansatz was built with")
    if truncate(ap.z, ap.ctx)[1]:
        from .errors import TruncationActiveError

        raise TruncationActiveError("truncation active at z")
    rng = np.random.default_rng(seed)
    neg = rayleigh_quotient(ap, ap.z)
    quotients = []
    for _ in range(samples):
        v = project_extended(_probe_field(ap, rng), ap)
        quotients.append(rayleigh_quotient(ap, v))
    tan = rayleigh_quotient(ap, ap.tangents[0])
    return CoercivityReport(neg, float(min(quotients)), tan, samples)
