"""Auxiliary equation P grad I_eps(z + w) = 0 solved by the fixed-point map S_eps.

``S(w) = w - (P I''(z))^{-1} P grad I(z + w)`` is a Newton step frozen at the
ansatz.  Everything is assembled in L^2 form: with ``B = -Delta + V(eps x)``
and ``s_j = B t_j``, the condition ``<h, t_j>_E = 0`` reads ``<h, s_j> = 0`` and
the projected equation becomes

    Q A Q h = Q R,

where ``Q`` is the L^2 projector onto the complement of ``span{s_j}``, ``A`` the
Hessian density operator at ``z`` and ``R`` the gradient density at ``z + w``.
``Q A Q`` is symmetric but indefinite (``z`` itself is a descent direction), so
the inner solve uses preconditioned MINRES.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, minres

from .ansatz import AnsatzPoint, project_orthogonal
from .barriers import BarrierParams, BarrierReport, barrier_check
from .errors import ConvergenceError, TruncationActiveError
from .fields import (
    EpsilonContext,
    ScalarField3,
    _convolve,
    _ksq,
    gradient_density,
    hessian_density,
    solve_weighted,
    truncate,
    weighted_inner,
)

__all__ = [
    "SolveParams",
    "CorrectionResult",
    "ResidualReport",
    "apply_S",
    "solve_auxiliary",
    "estimate_contraction",
    "full_residual",
    "InnerSystem",
]


@dataclass(frozen=True)
class SolveParams:
    """Tolerances and radii of the auxiliary solve.

    ``c0`` bounds the correction, ``|w|_E <= c0 eps``; ``barrier`` carries the
    radius ``rho`` (``barrier.R``) and the comparison constant.  ``fp_tol`` is
    relative to ``c0 eps``: iteration stops once ``|w_{k+1} - w_k|_E <= fp_tol c0 eps``.
    """

    c0: float = 2.0
    barrier: BarrierParams | None = None
    max_outer: int = 10
    fp_tol: float = 1e-4
    lin_tol: float = 1e-9
    max_inner: int = 300

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if not 0 < self.fp_tol < 1e-2:
            raise ValueError("fp_tol must lie in (0, 1e-2) so that it stays below c0 eps / 100")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be positive")

    @property
    def rho(self) -> float | None:
        return None if self.barrier is None else self.barrier.R

    def absolute_fp_tol(self, eps: float) -> float:
        return self.fp_tol * self.c0 * eps


@dataclass(frozen=True, eq=False)
class CorrectionResult:
    """Fixed point ``w`` of ``S_eps`` with its diagnostics."""

    w: ScalarField3
    norm_E: float
    iterations: int
    contraction_est: float
    delta_est: float | None
    barrier_report: BarrierReport | None
    in_gamma: bool
    norm_ok: bool
    orthogonality: float
    step_norms: tuple = field(default=())
    inner_iterations: tuple = field(default=())

    def record(self, ap: AnsatzPoint) -> dict:
        """JSON-ready summary."""
        return {
            "eps": ap.eps,
            "xi": ap.xi.tolist(),
            "norm_E": self.norm_E,
            "iterations": self.iterations,
            "contraction_est": self.contraction_est,
            "delta_est": self.delta_est,
            "in_gamma": self.in_gamma,
            "norm_ok": self.norm_ok,
            "orthogonality": self.orthogonality,
            "barrier": None if self.barrier_report is None else self.barrier_report.as_dict(),
            "step_norms": list(self.step_norms),
        }


class InnerSystem:
    """The projected Hessian ``Q A Q`` at one ansatz point, with a preconditioner."""

    def __init__(self, ap: AnsatzPoint, lin_tol: float = 1e-9, max_inner: int = 300):
        if truncate(ap.z, ap.ctx)[1]:
            raise TruncationActiveError("truncation active at z")
        self.ap = ap
        self.box = ap.box
        self.shape = self.box.shape
        self.lin_tol = lin_tol
        self.max_inner = max_inner
        S = np.stack([s.ravel() for s in ap.images], axis=1)
        self.basis, _ = np.linalg.qr(S)
        V = ap.ctx.potential_on(self.box)
        ksq, _ = _ksq(self.box.n, self.box.h)
        self._prec_symbol = ksq + float(np.sqrt(V.min() * V.max()))
        self.last_iterations = 0

    def q(self, x: np.ndarray) -> np.ndarray:
        """L^2 projection off ``span{s_j}`` (flat arrays)."""
        return x - self.basis @ (self.basis.T @ x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        v = ScalarField3(self.box, x.reshape(self.shape))
        return hessian_density(self.ap.z, v, self.ap.ctx, self.ap.coulomb_z).ravel()

    def _matvec(self, x):
        qx = self.q(x)
        return self.q(self.hessian(qx)) + (x - qx)

    def _prec(self, x):
        qx = self.q(x)
        y = sfft.irfftn(sfft.rfftn(qx.reshape(self.shape)) / self._prec_symbol, s=self.shape).ravel()
        return self.q(y) + (x - qx)

    def solve(self, rhs: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        """Solve ``Q A Q h = Q rhs`` with ``h`` in the range of ``Q``."""
        size = rhs.size
        b = self.q(rhs.ravel())
        if not np.any(b):
            self.last_iterations = 0
            return np.zeros(self.shape)
        A = LinearOperator((size, size), matvec=self._matvec, dtype=float)
        M = LinearOperator((size, size), matvec=self._prec, dtype=float)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = minres(A, b, x0=None if x0 is None else x0.ravel(), rtol=self.lin_tol,
                         maxiter=self.max_inner, M=M, callback=cb)
        self.last_iterations = count[0]
        if info != 0:
            raise ConvergenceError(
                f"projected Hessian solve stagnated after {count[0]} iterations "
                "(coercivity lost; reduce eps)"
            )
        return self.q(x).reshape(self.shape)


def _residual_density(ap: AnsatzPoint, w: ScalarField3) -> np.ndarray:
    u = ap.z + w
    if truncate(u, ap.ctx)[1]:
        raise TruncationActiveError("truncation active at z + w; the correction left the tube")
    return gradient_density(u, ap.ctx)


def apply_S(w: ScalarField3, ap: AnsatzPoint, ctx: EpsilonContext | None = None,
            params: SolveParams = SolveParams(), system: InnerSystem | None = None) -> ScalarField3:
    """One application of ``S_eps``: ``w - h`` with ``Q A Q h = Q R(z + w)``, then projected."""
    if ctx is not None and ctx != ap.ctx:
        raise ValueError("context differs from the one the ansatz was built with")
    system = system or InnerSystem(ap, params.lin_tol, params.max_inner)
    h = system.solve(_residual_density(ap, w))
    return project_orthogonal(ScalarField3(ap.box, w.values - h), ap)


def _orthogonality(ap: AnsatzPoint, w: ScalarField3, norm: float) -> float:
    if norm == 0:
        return 0.0
    return float(np.max(np.abs(ap.tangent_products(w))) / norm)


def solve_auxiliary(ap: AnsatzPoint, ctx: EpsilonContext | None = None,
                    params: SolveParams = SolveParams(), w0: ScalarField3 | None = None,
                    system: InnerSystem | None = None) -> CorrectionResult:
    """Iterate ``w_{k+1} = S(w_k)`` from ``w0`` (default 0) to the fixed point.

    ``contraction_est`` is the largest ratio of consecutive step norms.
    Membership in the admissible set is reported, not enforced: ``norm_ok``
    checks ``|w|_E <= c0 eps``, ``barrier_report`` the pointwise bound.

    Raises
    ------
    ConvergenceError
        If ``max_outer`` iterations do not reach the tolerance.
    """
    if ctx is not None and ctx != ap.ctx:
        raise ValueError("context differs from the one the ansatz was built with")
    ctx = ap.ctx
    system = system or InnerSystem(ap, params.lin_tol, params.max_inner)
    tol = params.absolute_fp_tol(ap.eps)
    w = ap.box.zeros() if w0 is None else project_orthogonal(w0, ap)
    steps, inner = [], []
    for k in range(1, params.max_outer + 1):
        w_new = apply_S(w, ap, params=params, system=system)
        inner.append(system.last_iterations)
        d = w_new - w
        steps.append(np.sqrt(max(weighted_inner(d, d, ctx), 0.0)))
        w = w_new
        if steps[-1] <= tol:
            break
    else:
        raise ConvergenceError(
            f"fixed-point iteration did not converge in {params.max_outer} steps "
            f"(last step {steps[-1]:.3e} > {tol:.3e}); the map is not contracting at "
            f"eps = {ap.eps}, reduce eps or enlarge c0"
        )
    ratios = [b / a for a, b in zip(steps[:-1], steps[1:]) if a > 0]
    contraction = max(ratios) if ratios else 0.0
    norm = float(np.sqrt(max(weighted_inner(w, w, ctx), 0.0)))
    report = barrier_check(w, ap.xi, ctx, params.barrier) if params.barrier is not None else None
    norm_ok = norm <= params.c0 * ap.eps
    orth = _orthogonality(ap, w, norm)
    in_gamma = norm_ok and (report is None or report.passed)
    return CorrectionResult(w, norm, k, contraction, None, report, in_gamma, norm_ok, orth,
                            tuple(steps), tuple(inner))


# ---------------------------------------------------------------------------
# contraction measurement
# ---------------------------------------------------------------------------


def _nonlinear_remainder(ap: AnsatzPoint, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """``N(w1) - N(w2) - N'(0)(w1 - w2)`` for ``N(w) = (W*(z+w)^2)(z+w)``, without cancellation."""
    z = ap.z.values
    box = ap.box
    dw = w1 - w2
    return (
        _convolve(2.0 * z * dw, box) * w1
        + _convolve(dw * (w1 + w2), box) * (z + w1)
        + _convolve(2.0 * z * w2 + w2 * w2, box) * dw
    )


def s_difference(system: InnerSystem, w1: ScalarField3, w2: ScalarField3) -> ScalarField3:
    """``S(w1) - S(w2)`` computed as ``(QAQ)^{-1} Q D`` with ``D`` the nonlinear remainder."""
    ap = system.ap
    D = _nonlinear_remainder(ap, w1.values, w2.values)
    return project_orthogonal(ScalarField3(ap.box, system.solve(D)), ap)


def _random_direction(ap: AnsatzPoint, rng: np.random.Generator) -> ScalarField3:
    from .ansatz import _probe_field

    v = project_orthogonal(_probe_field(ap, rng), ap)
    return v * (1.0 / np.sqrt(weighted_inner(v, v, ap.ctx)))


@dataclass(frozen=True)
class ContractionEstimate:
    """Largest measured Lipschitz ratio of ``S`` and the fitted exponent ``delta``."""

    estimate: float
    ratios: tuple
    delta_est: float
    delta_scales: tuple
    delta_values: tuple

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "ratios": list(self.ratios), "delta_est": self.delta_est,
                "delta_scales": list(self.delta_scales), "delta_values": list(self.delta_values)}


def estimate_contraction(ap: AnsatzPoint, ctx: EpsilonContext | None = None,
                         params: SolveParams = SolveParams(), pairs: int = 6, seed: int = 0,
                         w_star: ScalarField3 | None = None,
                         system: InnerSystem | None = None) -> ContractionEstimate:
    """Measure ``sup |S(w1) - S(w2)|_E / |w1 - w2|_E`` over admissible pairs.

    Pair members are ``w_star + r c0 eps v`` with seeded random orthogonal
    directions ``v`` and ``r`` in ``(0, 1/2]``, so both stay in the ball of
    radius ``c0 eps`` whenever ``|w_star|_E <= c0 eps / 2``.  Identical members
    are skipped.  ``delta_est`` is the log-log slope of ``|S(t v) - S(0)|_E``
    against ``|t v|_E`` for ``t c0 eps`` in ``[1e-3, 1/2]``.
    """
    if pairs < 5:
        raise ValueError("need at least 5 pairs")
    if ctx is not None and ctx != ap.ctx:
        raise ValueError("context differs from the one the ansatz was built with")
    system = system or InnerSystem(ap, params.lin_tol, params.max_inner)
    rng = np.random.default_rng(seed)
    radius = params.c0 * ap.eps
    base = ap.box.zeros() if w_star is None else w_star
    ratios = []
    for _ in range(pairs):
        r1, r2 = rng.uniform(0.05, 0.5, size=2) * radius
        w1 = base + _random_direction(ap, rng) * r1
        w2 = base + _random_direction(ap, rng) * r2
        d = w1 - w2
        dn = np.sqrt(max(weighted_inner(d, d, ap.ctx), 0.0))
        if dn == 0:
            continue
        sd = s_difference(system, w1, w2)
        ratios.append(np.sqrt(max(weighted_inner(sd, sd, ap.ctx), 0.0)) / dn)
    direction = _random_direction(ap, rng)
    zero = ap.box.zeros()
    scales = radius * np.geomspace(1e-3, 0.5, 6)
    vals = []
    for t in scales:
        sd = s_difference(system, direction * t, zero)
        vals.append(np.sqrt(max(weighted_inner(sd, sd, ap.ctx), 0.0)))
    delta = float(np.polyfit(np.log(scales), np.log(vals), 1)[0])
    return ContractionEstimate(float(max(ratios)), tuple(ratios), delta, tuple(scales), tuple(vals))


# ---------------------------------------------------------------------------
# full residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Residual of the full equation at a candidate solution ``u``.

    ``positive`` holds when ``min u >= -1e-8 max u``: negative values no larger
    than round-off relative to the peak are tolerated.
    """

    dual_norm: float
    pde_sup: float
    admissible: bool
    positive: bool

    def as_dict(self) -> dict:
        return dict(dual_norm=self.dual_norm, pde_sup=self.pde_sup, admissible=self.admissible,
                    positive=self.positive)


def full_residual(u: ScalarField3, ctx: EpsilonContext, lin_tol: float = 1e-10) -> ResidualReport:
    """Dual norm of ``grad I_eps(u)``, sup of the PDE residual, truncation and sign flags.

    ``pde_sup = sup |-Delta u + V(eps x) u - (W*u^2) u| / max(1, sup |u|)``.
    """
    box = u.box
    R = gradient_density(u, ctx)
    g = solve_weighted(R, box, ctx, lin_tol)
    dual = float(np.sqrt(max(np.vdot(R, g) * box.cell_volume, 0.0)))
    pde = float(np.abs(R).max() / max(1.0, u.max_abs()))
    admissible = not truncate(u, ctx)[1]
    positive = bool(u.values.min() >= -1e-8 * u.values.max())
    return ResidualReport(dual, pde, admissible, positive)


def with_barrier(params: SolveParams, barrier: BarrierParams) -> SolveParams:
    return replace(params, barrier=barrier)
