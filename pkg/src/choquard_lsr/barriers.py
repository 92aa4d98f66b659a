"""Comparison functions and pointwise barriers for the correction w.

Far from the concentration point the potential behaves like ``m |x|^{-alpha}``.
The radial equation ``-Delta u + m r^{-alpha} u = f`` becomes, with
``v = r u``,

    -v'' + m r^{-alpha} v = r f,

whose homogeneous solutions are ``v1 = sqrt(r) K_l(c r^p)`` (decaying) and
``v2 = sqrt(r) I_l(c r^p)`` (growing) with ``l = 1/(2 - alpha)``,
``c = 2 sqrt(m)/(2 - alpha)`` and ``p = (2 - alpha)/2``.  For ``alpha = 2``
they are the powers ``r^{(1 -+ sqrt(1 + 4m))/2}``.  Far out,
``v1 ~ r^{alpha/4} exp(-c r^p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .bessel import bessel_ik_scaled
from .errors import AdmissibilityError, ConvergenceError
from .fields import EpsilonContext, ScalarField3
from .potentials import PotentialSpec

__all__ = [
    "BarrierParams",
    "ComparisonPair",
    "BarrierReport",
    "decay_radius",
    "comparison_functions",
    "homogeneous_residual",
    "solve_comparison_problem",
    "comparison_gamma",
    "barrier_check",
    "default_source",
    "make_barrier_params",
]


@dataclass(frozen=True)
class BarrierParams:
    """Decay model ``m r^{-alpha}``, inner radius ``R`` and comparison constant ``gamma``.

    ``alpha = 0`` is accepted (constant lower bound); the Bessel formulas then
    reduce to ``exp(-sqrt(m) r)``.
    """

    m: float
    alpha: float
    R: float
    gamma: float | None = None

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not 0.0 <= self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in [0, 2], got {self.alpha}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def order(self) -> float:
        return np.inf if self.alpha == 2 else 1.0 / (2.0 - self.alpha)

    @property
    def arg_coeff(self) -> float:
        return 2.0 * np.sqrt(self.m) / (2.0 - self.alpha)

    @property
    def arg_power(self) -> float:
        return (2.0 - self.alpha) / 2.0


@dataclass(frozen=True)
class ComparisonPair:
    """The homogeneous solutions ``v1, v2`` of ``-v'' + m r^{-alpha} v = 0`` and ``u = v/r``."""

    m: float
    alpha: float

    def _powers(self):
        s = np.sqrt(1.0 + 4.0 * self.m)
        return (1.0 - s) / 2.0, (1.0 + s) / 2.0

    def argument(self, r):
        c = 2.0 * np.sqrt(self.m) / (2.0 - self.alpha)
        return c * np.asarray(r, dtype=float) ** ((2.0 - self.alpha) / 2.0)

    def log_v(self, r):
        """``(log v1, log v2)``; avoids overflow far out."""
        r = np.asarray(r, dtype=float)
        if self.alpha == 2:
            e1, e2 = self._powers()
            return e1 * np.log(r), e2 * np.log(r)
        x = self.argument(r)
        i_s, k_s, _, _ = bessel_ik_scaled(1.0 / (2.0 - self.alpha), x)
        half = 0.5 * np.log(r)
        return half + np.log(k_s) - x, half + np.log(i_s) + x

    def v_and_derivative(self, r):
        """``(v1, v1', v2, v2')`` at radii ``r``."""
        r = np.asarray(r, dtype=float)
        if self.alpha == 2:
            e1, e2 = self._powers()
            return r**e1, e1 * r ** (e1 - 1), r**e2, e2 * r ** (e2 - 1)
        p = (2.0 - self.alpha) / 2.0
        x = self.argument(r)
        i_s, k_s, ip_s, kp_s = bessel_ik_scaled(1.0 / (2.0 - self.alpha), x)
        dx = p * x / r
        sq = np.sqrt(r)
        em, ep = np.exp(-x), np.exp(x)
        v1 = sq * k_s * em
        v2 = sq * i_s * ep
        d1 = (0.5 / sq * k_s + sq * kp_s * dx) * em
        d2 = (0.5 / sq * i_s + sq * ip_s * dx) * ep
        return v1, d1, v2, d2

    def v1(self, r):
        return self.v_and_derivative(r)[0]

    def v2(self, r):
        return self.v_and_derivative(r)[2]

    def u1(self, r):
        return self.v1(r) / np.asarray(r, dtype=float)

    def u2(self, r):
        return self.v2(r) / np.asarray(r, dtype=float)

    def wronskian(self, r):
        """``v1 v2' - v1' v2``, constant in ``r``."""
        v1, d1, v2, d2 = self.v_and_derivative(r)
        return v1 * d2 - d1 * v2

    def u1_table(self, r_lo: float, r_hi: float, n: int = 2000):
        """Cubic spline of ``log u1`` on ``[r_lo, r_hi]`` for bulk evaluation."""
        r = np.geomspace(r_lo, r_hi, n)
        lv1, _ = self.log_v(r)
        return CubicSpline(np.log(r), lv1 - np.log(r))


def comparison_functions(bp: BarrierParams) -> ComparisonPair:
    """The pair ``u1 = v1/r`` (decaying) and ``u2 = v2/r`` (growing) for ``m, alpha``."""
    return ComparisonPair(float(bp.m), float(bp.alpha))


def homogeneous_residual(pair: ComparisonPair, r, step: float = 1e-2) -> np.ndarray:
    """``|-v1'' + m r^{-alpha} v1|`` with a five-point difference of step ``step``."""
    r = np.asarray(r, dtype=float)
    offsets = np.array([-2, -1, 0, 1, 2]) * step
    w = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * step * step)
    vals = pair.v1(r[..., None] + offsets)
    d2 = vals @ w
    return np.abs(-d2 + pair.m * r ** (-pair.alpha) * vals[..., 2])


# ---------------------------------------------------------------------------
# decay radius
# ---------------------------------------------------------------------------


def _lattice_dirs(count: int = 64) -> np.ndarray:
    g = np.array([[i, j, k] for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
                  if (i, j, k) != (0, 0, 0)], dtype=float)
    rng = np.random.default_rng(7)
    extra = rng.normal(size=(count - len(g), 3))
    d = np.concatenate([g, extra])
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _y_samples() -> np.ndarray:
    e = np.eye(3)
    corners = np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)]) / np.sqrt(3)
    return np.concatenate([np.zeros((1, 3)), e, -e, corners, 0.5 * corners])


def decay_radius(V: PotentialSpec, m: float, eps0: float, R_cap: float = 1e4,
                  factor: float = 1.1) -> float:
    """Smallest searched ``R`` with ``V(eps x + y) >= m |x|^{-alpha}`` for ``|x| >= R``.

    Checked on a lattice of directions, radii ``|x|`` in ``[R, 10 R]``,
    ``eps`` in ``{eps0, eps0/2, eps0/4}`` and points ``|y| <= 1``; ``R`` starts
    at 1 and grows geometrically by ``factor``.

    Raises
    ------
    AdmissibilityError
        If ``m >= A0`` or no radius up to ``R_cap`` works.
    """
    if not 0.0 < eps0 < 1.0:
        raise ValueError(f"eps0 must lie in (0, 1), got {eps0}")
    if not 0.0 < m < V.A0:
        raise AdmissibilityError(f"need 0 < m < A0 = {V.A0:.6g}, got m = {m}")
    alpha = V.alpha
    dirs = _lattice_dirs()
    ys = _y_samples()
    epss = np.array([eps0, eps0 / 2.0, eps0 / 4.0])
    R = 1.0
    while R <= R_cap:
        radii = np.geomspace(R, 10.0 * R, 12)
        x = dirs[:, None, :] * radii[None, :, None]
        pts = epss[:, None, None, None, None] * x[None, :, :, None, :] + ys[None, None, None, :, :]
        vals = V(pts)
        need = m * radii[None, None, :, None] ** (-alpha)
        if np.all(vals >= need):
            return float(R)
        R *= factor
    raise AdmissibilityError(f"no decay radius below R_cap = {R_cap}; m is too close to A0")


# ---------------------------------------------------------------------------
# comparison problem
# ---------------------------------------------------------------------------


def default_source(r):
    """Source ``f(r) = e^{-r}`` used to fix the comparison constant."""
    return np.exp(-np.asarray(r, dtype=float))


def _outer_radius(pair: ComparisonPair, R: float) -> float:
    if pair.alpha == 2:
        return R * 1e8
    c = 2.0 * np.sqrt(pair.m) / (2.0 - pair.alpha)
    p = (2.0 - pair.alpha) / 2.0
    x_far = min(c * R**p + 60.0, 300.0)
    return max((x_far / c) ** (1.0 / p), 50.0 * R) if x_far < 300.0 else (x_far / c) ** (1.0 / p)


def solve_comparison_problem(bp: BarrierParams, f=default_source, n: int = 6001):
    """Decaying solution of ``-Delta phi + m r^{-alpha} phi = f`` on ``r > R`` with ``phi(R) = 1``.

    Solved by variation of parameters with ``v1, v2``:
    ``v = A v1 + (v1 int_R^r v2 g + v2 int_r^inf v1 g)/Wr`` with ``g = r f`` and
    ``Wr`` the Wronskian, integrals by Simpson's rule on a logarithmic grid.

    Returns
    -------
    r, phi, ratio : ndarray
        Radii, ``phi(r)`` and ``phi(r)/u1(r)``.
    """
    pair = comparison_functions(bp)
    R = bp.R
    r = np.geomspace(R, _outer_radius(pair, R), n)
    t = np.log(r)
    v1, _, v2, _ = pair.v_and_derivative(r)
    wr = pair.wronskian(np.array([R]))[0]
    g = r * np.asarray(f(r), dtype=float)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("source must be non-negative and finite")
    # integrate in t = log r, ds = r dt
    inner_int = cumulative_simpson(v2 * g * r, x=t, initial=0.0)
    tail_int = cumulative_simpson((v1 * g * r)[::-1], x=-t[::-1], initial=0.0)[::-1]
    total = inner_int[-1]
    if not np.isfinite(total) or v2[-1] * g[-1] * r[-1] > 1e-8 * max(total, 1e-300):
        raise ConvergenceError("source violates the integrability condition int r^2 f u2 < inf")
    vp = (v1 * inner_int + v2 * tail_int) / wr
    A = (R - vp[0]) / v1[0]
    v = A * v1 + vp
    phi = v / r
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = A + (inner_int + (v2 / v1) * tail_int) / wr
    ratio = np.where(np.isfinite(ratio), ratio, A + total / wr)
    return r, phi, ratio


def comparison_gamma(bp: BarrierParams, f=default_source) -> float:
    """``sup_{r > R} phi(r)/u1(r)`` for the comparison problem with source ``f``.

    The ratio is non-decreasing in ``r`` for positive ``f`` and tends to
    ``A + (1/Wr) int_R^inf v2 r f``; the supremum over the grid and the limit
    are both taken.
    """
    r, phi, ratio = solve_comparison_problem(bp, f)
    return float(np.max(ratio))


def make_barrier_params(V: PotentialSpec, eps0: float, m: float | None = None,
                        f=default_source) -> BarrierParams:
    """Default barrier: ``m = A0/4``, ``R`` from :func:`decay_radius`, ``gamma`` from the source ``f``."""
    m = V.A0 / 4.0 if m is None else m
    R = decay_radius(V, m, eps0)
    bp = BarrierParams(m, V.alpha, R)
    return replace(bp, gamma=comparison_gamma(bp, f))


# ---------------------------------------------------------------------------
# pointwise check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarrierReport:
    """Outcome of :func:`barrier_check`.

    Margins are ``sqrt(eps) (1 - |w|/bound)`` minimized over the nodes of each
    region, so ``w = 0`` has margin ``sqrt(eps)`` and a violation is negative.
    """

    passed: bool
    worst_margin: float
    inner_margin: float
    outer_margin: float
    worst_point: tuple

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "inner_margin": self.inner_margin,
            "outer_margin": self.outer_margin,
            "worst_point": list(self.worst_point),
        }


def barrier_bound(box, xi, ctx: EpsilonContext, bp: BarrierParams) -> np.ndarray:
    """``sqrt(eps)`` inside ``|x - xi| <= R`` and ``gamma sqrt(eps) u1(|x - xi|)`` outside."""
    if bp.gamma is None:
        raise ValueError("barrier parameters need gamma")
    d = box.distance_from(xi)
    se = np.sqrt(ctx.eps)
    bound = np.full(d.shape, se)
    outer = d > bp.R
    if np.any(outer):
        table = comparison_functions(bp).u1_table(bp.R, max(d.max(), bp.R * 1.01) * 1.01)
        bound[outer] = bp.gamma * se * np.exp(table(np.log(d[outer])))
    return bound


def barrier_check(w: ScalarField3, xi, ctx: EpsilonContext, bp: BarrierParams) -> BarrierReport:
    """Check ``|w| <= bound`` at every node (see :func:`barrier_bound`)."""
    box = w.box
    bound = barrier_bound(box, xi, ctx, bp)
    se = np.sqrt(ctx.eps)
    margin = se * (1.0 - np.abs(w.values) / bound)
    inner = box.distance_from(xi) <= bp.R
    inner_m = float(margin[inner].min()) if np.any(inner) else se
    outer_m = float(margin[~inner].min()) if np.any(~inner) else se
    idx = np.unravel_index(np.argmin(margin), margin.shape)
    worst = float(margin[idx])
    return BarrierReport(worst >= 0.0, worst, inner_m, outer_m, tuple(box.points[idx].tolist()))
