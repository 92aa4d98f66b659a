"""Radial ground state of the limiting Choquard problem.

The profile solves, for a coefficient ``a > 0`` (``a = 1`` for the ground
state itself),

    -U'' - (2/r) U' + a U = Phi U,      Phi = W * U^2,   W(x) = 1/(4 pi |x|),

with ``U > 0`` decreasing.  The solver bisects a shooting parameter to find the
decaying branch, rescales with the symmetry ``U_a(x) = a U(sqrt(a) x)`` and then
polishes the result with Newton's method on the discrete equations, so that
the grid residual reported by :func:`residual` is at round-off level.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .errors import ConvergenceError, NonMonotoneProfileError, ShootingBracketError

__all__ = [
    "RadialGrid",
    "RadialProfile",
    "SectorSpectrum",
    "solve_ground_state",
    "evaluate_profile",
    "evaluate_profile_derivative",
    "scale_profile",
    "radial_newton_potential",
    "residual",
    "residual_report",
    "linearized_spectrum",
]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid ``r_i = i * r_max / (n - 1)`` starting at the origin.

    The ground-state solver additionally requires ``r_max >= 30`` and
    ``n >= 1000``; scaled profiles live on shrunk or stretched copies.
    """

    r_max: float
    n: int

    def __post_init__(self):
        if not (self.r_max > 0 and np.isfinite(self.r_max)):
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.n < 8:
            raise ValueError(f"need at least 8 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return self.r_max / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        r = np.linspace(0.0, self.r_max, self.n)
        r.setflags(write=False)
        return r

    def scaled(self, factor: float) -> "RadialGrid":
        return RadialGrid(self.r_max * factor, self.n)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Tabulated radial solution with an exponential tail beyond ``r_max``.

    ``tail = (A, kappa, beta)`` describes ``U(r) ~ A r**beta exp(-kappa r)``.
    ``a`` is the linear coefficient of the equation the profile solves.
    """

    grid: RadialGrid
    values: np.ndarray
    potential_values: np.ndarray
    tail: tuple[float, float, float]
    a: float = 1.0
    tol: float = 1e-8

    @cached_property
    def _spline(self) -> CubicSpline:
        # U is even in r, so the slope at the origin vanishes
        return CubicSpline(self.grid.nodes, self.values, bc_type=((1, 0.0), "not-a-knot"))

    @property
    def peak(self) -> float:
        return float(self.values[0])

    @property
    def mass(self) -> float:
        """``int U^2 dx`` over R^3 (grid part only)."""
        r = self.grid.nodes
        return float(4.0 * np.pi * _integrate(r**2 * self.values**2, self.grid.h))

    def is_monotone(self) -> bool:
        v = self.values
        return bool(np.all(v > 0) and np.all(np.diff(v) < 0))


@dataclass(frozen=True, eq=False)
class SectorSpectrum:
    """Lowest eigenpairs of the linearized operator in angular sector ``ell``.

    Eigenvectors are radial functions ``phi(r_i)`` normalized so that
    ``int phi^2 r^2 dr = 1``.
    """

    ell: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: RadialGrid


# ---------------------------------------------------------------------------
# quadrature and finite-difference operators
# ---------------------------------------------------------------------------


def _interval_matrix(n: int, h: float) -> sp.csr_matrix:
    """Rows give ``int_{r_{k-1}}^{r_k} f`` (k = 1..n-1) from the nodal values of f.

    Each interval uses the cubic through the four nearest nodes (fourth order).
    """
    rows, cols, vals = [], [], []
    c = h / 24.0

    def put(k, idx, w):
        rows.extend([k - 1] * len(idx))
        cols.extend(idx)
        vals.extend(c * np.asarray(w))

    put(1, [0, 1, 2, 3], [9, 19, -5, 1])
    for k in range(2, n - 1):
        put(k, [k - 2, k - 1, k, k + 1], [-1, 13, 13, -1])
    put(n - 1, [n - 4, n - 3, n - 2, n - 1], [1, -5, 19, 9])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, n))


def _integrate(f: np.ndarray, h: float) -> float:
    return float(_interval_matrix(len(f), h).dot(f).sum())


def _cumulative_pair(rho: np.ndarray, r: np.ndarray, h: float):
    """Return ``P_i = int_0^{r_i} s^2 rho`` and ``Q_i = int_{r_i}^{r_max} s rho``."""
    M = _interval_matrix(len(r), h)
    inner = M.dot(r**2 * rho)
    outer = M.dot(r * rho)
    P = np.concatenate(([0.0], np.cumsum(inner)))
    Q = np.concatenate((np.cumsum(outer[::-1])[::-1], [0.0]))
    return P, Q


def radial_newton_potential(density, grid: RadialGrid) -> np.ndarray:
    """Newtonian potential ``(W * rho)(r)`` of a radial density sampled on ``grid``.

    Parameters
    ----------
    density : array_like
        Values of the full 3D density ``rho(r_i)``; taken as zero beyond ``r_max``.
    grid : RadialGrid

    Returns
    -------
    ndarray
        ``(1/r) int_0^r s^2 rho ds + int_r^inf s rho ds``, which solves
        ``-Delta phi = rho``.
    """
    rho = np.asarray(density, dtype=float)
    if rho.shape != (grid.n,):
        raise ValueError(f"density has shape {rho.shape}, grid has {grid.n} nodes")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density contains non-finite values")
    r = grid.nodes
    P, Q = _cumulative_pair(rho, r, grid.h)
    phi = Q.copy()
    phi[1:] += P[1:] / r[1:]
    return phi


@lru_cache(maxsize=8)
def _radial_laplacian(n: int, h: float) -> sp.csr_matrix:
    """Fourth-order ``U'' + (2/r) U'`` on rows 0..n-2 (row n-1 left empty).

    Even reflection ``U(-r) = U(r)`` closes the stencil at the origin, where the
    operator equals ``3 U''(0)``.
    """
    r = np.arange(n) * h
    d2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    d1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
    L = sp.lil_matrix((n, n))
    # origin
    for off, w in zip(range(-2, 3), d2):
        L[0, abs(off)] += 3.0 * w
    for i in range(1, n - 2):
        for off, w2, w1 in zip(range(-2, 3), d2, d1):
            L[i, abs(i + off)] += w2 + 2.0 / r[i] * w1
    # one-sided closure next to the outer boundary
    i = n - 2
    d2b = np.array([-1.0, 4.0, 6.0, -20.0, 11.0]) / (12.0 * h * h)
    d1b = np.array([-1.0, 6.0, -18.0, 10.0, 3.0]) / (12.0 * h)
    for j, w2, w1 in zip(range(i - 3, i + 2), d2b, d1b):
        L[i, j] += w2 + 2.0 / r[i] * w1
    return L.tocsr()


def _tail_ratio(grid: RadialGrid, a: float, charge: float = 0.0) -> float:
    """``U(r_{n-1}) / U(r_{n-2})`` for ``U ~ r^beta e^{-sqrt(a) r}``.

    ``charge`` is ``r Phi(r)`` at the edge; the far field ``Phi ~ charge/r``
    gives ``beta = charge / (2 sqrt(a)) - 1``.
    """
    r = grid.nodes
    beta = charge / (2.0 * np.sqrt(a)) - 1.0
    return float(np.exp(-np.sqrt(a) * grid.h) * (r[-1] / r[-2]) ** beta)


def _system_residual(U: np.ndarray, phi: np.ndarray, grid: RadialGrid, a: float):
    """Discrete residuals of the U- and Phi-equations, boundary rows included.

    The outer rows impose ``U ~ r^beta e^{-sqrt(a) r}`` and ``Phi ~ 1/r``.
    """
    L = _radial_laplacian(grid.n, grid.h)
    r = grid.nodes
    F = -L.dot(U) + a * U - phi * U
    F[-1] = U[-1] - _tail_ratio(grid, a, r[-2] * phi[-2]) * U[-2]
    G = -L.dot(phi) - U * U
    G[-1] = phi[-1] - phi[-2] * r[-2] / r[-1]
    return F, G


# ---------------------------------------------------------------------------
# ground state
# ---------------------------------------------------------------------------


def _shoot_rhs(r, y):
    U, dU, S, dS = y
    return [dU, -2.0 / r * dU - S * U, dS, -2.0 / r * dS - U * U]


def _shoot(s0: float, r_end: float):
    """Integrate -Delta U = S U, -Delta S = U^2 from U(0) = 1, S(0) = s0.

    Returns ``'over'`` if U crosses zero, ``'under'`` if U turns upward,
    ``'none'`` otherwise, together with the integration result.
    """
    r0 = 1e-4
    y0 = [1.0 - s0 * r0**2 / 6.0, -s0 * r0 / 3.0, s0 - r0**2 / 6.0, -r0 / 3.0]

    def crosses_zero(r, y):
        return y[0]

    crosses_zero.terminal = True
    crosses_zero.direction = -1

    def turns_up(r, y):
        return y[1]

    turns_up.terminal = True
    turns_up.direction = 1
    sol = solve_ivp(
        _shoot_rhs,
        (r0, r_end),
        y0,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        events=(crosses_zero, turns_up),
        dense_output=True,
    )
    if sol.t_events[0].size:
        return "over", sol
    if sol.t_events[1].size:
        return "under", sol
    return "none", sol


def _bisect_shooting(max_doublings: int = 30):
    lo, hi = 0.0, 1.0
    for _ in range(max_doublings):
        outcome, _ = _shoot(hi, 400.0)
        if outcome == "over":
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ShootingBracketError("no overshooting value of S(0) found")
    if _shoot(lo, 400.0)[0] != "under":
        raise ShootingBracketError("no undershooting value of S(0) found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        outcome, _ = _shoot(mid, 400.0)
        if outcome == "over":
            hi = mid
        else:
            lo = mid
        if hi - lo <= 4e-16 * hi:
            break
    return lo, hi


def _initial_guess(grid: RadialGrid) -> np.ndarray:
    """Shooting solution rescaled to ``Phi(inf) = 0``, continued by a Yukawa tail."""
    lo, hi = _bisect_shooting()
    _, sol_lo = _shoot(lo, 400.0)
    _, sol_hi = _shoot(hi, 400.0)
    # trust the trajectory where the two bracketing shots still agree
    rs = np.linspace(sol_lo.t[0], min(sol_lo.t[-1], sol_hi.t[-1]), 4000)
    u_lo = sol_lo.sol(rs)[0]
    u_hi = sol_hi.sol(rs)[0]
    good = np.abs(u_lo - u_hi) < 1e-6 * np.abs(u_lo).max()
    r_cut = rs[np.argmin(good)] if not good.all() else rs[-1]
    r_cut *= 0.9
    _, _, S, dS = sol_lo.sol(r_cut)
    s_inf = S + r_cut * dS
    if s_inf >= 0:
        raise ShootingBracketError("shooting solution does not approach a negative constant")
    lam = -1.0 / s_inf
    r = grid.nodes
    x = np.sqrt(lam) * r
    U = np.empty_like(r)
    inside = x <= r_cut
    xs = np.maximum(x[inside], sol_lo.t[0])
    U[inside] = lam * sol_lo.sol(xs)[0]
    # seam-matched Yukawa continuation
    r_seam = r_cut / np.sqrt(lam)
    u_seam = lam * sol_lo.sol(r_cut)[0]
    ro = r[~inside]
    U[~inside] = u_seam * r_seam / ro * np.exp(-(ro - r_seam))
    return U


def _newton_polish(U: np.ndarray, grid: RadialGrid, a: float, tol: float, max_iter: int = 40):
    """Newton iterations on the coupled finite-difference system for (U, Phi)."""
    n = grid.n
    L = _radial_laplacian(n, grid.h).tolil()
    r = grid.nodes
    L[n - 1, :] = 0.0
    L = L.tocsr()
    interior = np.ones(n)
    interior[-1] = 0.0
    log_step = np.log(r[-1] / r[-2]) * r[-2] / (2.0 * np.sqrt(a))
    bc_phi = sp.csr_matrix(([1.0, -r[-2] / r[-1]], ([n - 1, n - 1], [n - 1, n - 2])), shape=(n, n))
    phi = radial_newton_potential(U * U, grid)
    best, history = None, []
    for _ in range(max_iter):
        F, G = _system_residual(U, phi, grid, a)
        res = max(np.abs(F[:-1]).max(), np.abs(G[:-1]).max())
        history.append(res)
        if best is None or res < best[0]:
            best = (res, U.copy(), phi.copy())
        # stop once round-off dominates
        if res < tol and len(history) > 1 and res > 0.1 * history[-2]:
            break
        tau = _tail_ratio(grid, a, r[-2] * phi[-2])
        bc_u = sp.csr_matrix(([1.0, -tau], ([n - 1, n - 1], [n - 1, n - 2])), shape=(n, n))
        bc_up = sp.csr_matrix(([-tau * log_step * U[-2]], ([n - 1], [n - 2])), shape=(n, n))
        J = sp.bmat(
            [
                [-L + sp.diags(interior * (a - phi)) + bc_u, sp.diags(-interior * U) + bc_up],
                [sp.diags(-2.0 * interior * U), -L + bc_phi],
            ],
            format="csc",
        )
        step = spla.spsolve(J, -np.concatenate((F, G)))
        U = U + step[:n]
        phi = phi + step[n:]
    res, U, phi = best
    if res > tol:
        raise ConvergenceError(f"Newton polish stalled at residual {res:.3e} > tol {tol:.1e}")
    return U, phi


def _fit_tail(grid: RadialGrid, U: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of ``log U = log A + beta log r - kappa r`` on the last 20%."""
    r = grid.nodes
    start = int(0.8 * grid.n)
    rr, uu = r[start:], U[start:]
    X = np.column_stack([np.ones_like(rr), np.log(rr), -rr])
    coef, *_ = np.linalg.lstsq(X, np.log(uu), rcond=None)
    _, beta, kappa = coef
    # match the last node exactly so the seam is continuous
    A = U[-1] / (r[-1] ** beta * np.exp(-kappa * r[-1]))
    return float(A), float(kappa), float(beta)


def solve_ground_state(grid: RadialGrid, tol: float = 1e-8) -> RadialProfile:
    """Compute the positive radial ground state ``U`` of ``-Delta U + U = (W*U^2) U``.

    Parameters
    ----------
    grid : RadialGrid
        Must satisfy ``r_max >= 30`` and ``n >= 1000``.
    tol : float
        Bound on the sup-norm of the discrete residual.

    Raises
    ------
    ShootingBracketError
        If the decaying branch cannot be bracketed.
    NonMonotoneProfileError
        If the polished profile is not positive and strictly decreasing.
    """
    if grid.r_max < 30 or grid.n < 1000:
        raise ValueError("ground-state grid needs r_max >= 30 and n >= 1000")
    if tol < 1e3 * np.finfo(float).eps:
        raise ValueError(f"tol={tol} is below 1e3 * machine epsilon")
    U = _initial_guess(grid)
    U, phi = _newton_polish(U, grid, 1.0, tol)
    if not (np.all(U > 0) and np.all(np.diff(U) < 0)):
        raise NonMonotoneProfileError("profile is not positive and strictly decreasing")
    if U[-1] >= 1e-8 * U[0]:
        raise NonMonotoneProfileError("profile has not decayed by 1e-8 at r_max; enlarge the grid")
    for arr in (U, phi):
        arr.setflags(write=False)
    return RadialProfile(grid, U, phi, _fit_tail(grid, U), 1.0, tol)


def evaluate_profile(p: RadialProfile, r) -> np.ndarray:
    """Cubic interpolation on the grid, fitted tail ``A r^beta e^{-kappa r}`` beyond."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    out = np.empty_like(r)
    inside = r <= p.grid.r_max
    out[inside] = p._spline(r[inside])
    A, kappa, beta = p.tail
    ro = r[~inside]
    out[~inside] = A * ro**beta * np.exp(-kappa * ro)
    return out


def evaluate_profile_derivative(p: RadialProfile, r) -> np.ndarray:
    """``dU/dr`` consistent with :func:`evaluate_profile`."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    inside = r <= p.grid.r_max
    out[inside] = p._spline(r[inside], 1)
    A, kappa, beta = p.tail
    ro = r[~inside]
    out[~inside] = A * ro**beta * np.exp(-kappa * ro) * (beta / ro - kappa)
    return out


def scale_profile(p: RadialProfile, a: float) -> RadialProfile:
    """Profile of ``U_a(x) = a U(sqrt(a) x)``, which solves ``-Delta U_a + a U_a = (W*U_a^2) U_a``.

    The grid is shrunk by ``1/sqrt(a)`` so nodal values map exactly.
    """
    if not a > 0:
        raise ValueError(f"scaling factor must be positive, got {a}")
    if a == 1.0:
        return p
    s = np.sqrt(a)
    A, kappa, beta = p.tail
    values = a * p.values
    phi = a * p.potential_values
    for arr in (values, phi):
        arr.setflags(write=False)
    tail = (A * a * s**beta, kappa * s, beta)
    return RadialProfile(p.grid.scaled(1.0 / s), values, phi, tail, p.a * a, p.tol)


def residual_report(p: RadialProfile) -> dict:
    """Sup-norm residuals of the radial system over nodes ``0..n-2``.

    Keys
    ----
    u_equation
        ``-U'' - (2/r)U' + aU - Phi U`` with Phi recomputed by
        :func:`radial_newton_potential` (quadrature).
    phi_equation
        ``-Phi'' - (2/r)Phi' - U^2`` for the stored potential.
    u_equation_stored
        The U-equation with the stored potential, i.e. the discrete system
        the Newton polish drives to round-off.
    """
    g = p.grid
    U = np.asarray(p.values)
    phi = np.asarray(p.potential_values)
    F, G = _system_residual(U, phi, g, p.a)
    Fq, _ = _system_residual(U, radial_newton_potential(U * U, g), g, p.a)
    return {
        "u_equation": float(np.abs(Fq[:-1]).max()),
        "phi_equation": float(np.abs(G[:-1]).max()),
        "u_equation_stored": float(np.abs(F[:-1]).max()),
    }


def residual(p: RadialProfile) -> float:
    """Sup over interior nodes of ``|-U'' - (2/r)U' + aU - Phi U|``, Phi from quadrature."""
    return residual_report(p)["u_equation"]


# ---------------------------------------------------------------------------
# linearized spectrum
# ---------------------------------------------------------------------------


def _sector_matrix(p: RadialProfile, ell: int, r: np.ndarray, h: float) -> np.ndarray:
    """Symmetric matrix of L_ell in the variable v = r phi on the interior nodes.

    The local part uses the five-point stencil with odd reflection at the
    origin; the multipole term is integrated with the trapezoidal rule.
    """
    m = len(r)
    U = p.values[1 : m + 1]
    phi = p.potential_values[1 : m + 1]
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    H = np.zeros((m, m))
    idx = np.arange(m)
    for off, w in zip(range(-2, 3), c):
        if off == 0:
            H[idx, idx] -= w
            continue
        j = idx + off
        ok = (j >= 0) & (j < m)
        H[idx[ok], j[ok]] -= w
    # v(-r) = -v(r): node -1 mirrors node 1 (index 0 here)
    H[0, 0] -= -c[0]
    H[idx, idx] += ell * (ell + 1) / r**2 + p.a - phi
    # nonlocal: (2/(2l+1)) r_i U_i G(r_i, r_j) r_j U_j h
    lo = np.minimum.outer(r, r)
    hi = np.maximum.outer(r, r)
    G = lo**ell / hi ** (ell + 1)
    w = r * U
    H -= (2.0 / (2 * ell + 1)) * h * (w[:, None] * G * w[None, :])
    return H


def linearized_spectrum(p: RadialProfile, ell_max: int = 3, k: int = 4, r_cut: float | None = None):
    """Lowest ``k`` eigenvalues of the linearization around ``U`` in sectors ``0..ell_max``.

    The operator is ``L_ell phi = -phi'' - (2/r)phi' + ell(ell+1)phi/r^2 + a phi
    - Phi phi - 2 U N_ell[U phi]`` with the multipole reduction
    ``N_ell[g](r) = (r^{-(l+1)} int_0^r s^{l+2} g + r^l int_r^inf s^{1-l} g)/(2l+1)``
    of the Coulomb kernel, discretized in ``v = r phi`` with Dirichlet ends.

    Parameters
    ----------
    r_cut : float, optional
        Truncate the radial domain (default: the whole profile grid).
    """
    if ell_max < 2 or k < 3:
        raise ValueError("need ell_max >= 2 and k >= 3")
    g = p.grid
    r_all = g.nodes
    last = g.n - 1 if r_cut is None else int(np.searchsorted(r_all, r_cut))
    r = r_all[1:last]
    out = []
    for ell in range(ell_max + 1):
        H = _sector_matrix(p, ell, r, g.h)
        try:
            vals, vecs = eigh(H, subset_by_index=[0, k - 1], driver="evr")
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise ConvergenceError(f"eigensolver failed in sector {ell}") from exc
        phi = np.zeros((last + 1 if r_cut is not None else g.n, k))
        phi[1 : len(r) + 1] = vecs / r[:, None] / np.sqrt(g.h)
        if ell == 0:
            phi[0] = phi[1]
        out.append(SectorSpectrum(ell, vals, phi, g))
    return out


def replace_values(p: RadialProfile, values: np.ndarray) -> RadialProfile:
    """Copy of ``p`` with new nodal values (potential recomputed)."""
    values = np.array(values, dtype=float)
    phi = radial_newton_potential(values * values, p.grid)
    return dataclasses.replace(p, values=values, potential_values=phi)
