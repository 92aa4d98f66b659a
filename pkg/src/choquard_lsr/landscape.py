"""Reduced functional Phi_eps(xi) = I_eps(z + w), its critical points and concentration.

To leading order ``Phi_eps(xi) = V(eps xi)^{3/2} D / 4`` with
``D = int int W(x - y) U(x)^2 U(y)^2``, so critical points of ``Phi_eps`` sit
near critical points of ``V`` in the slow variable ``x = eps xi``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import gamma, gammaincc

from .ansatz import build_ansatz
from .errors import ChoquardError, ConvergenceError
from .fields import Box3, EpsilonContext, ScalarField3, energy
from .potentials import PotentialSpec
from .radial import RadialProfile, _integrate, radial_newton_potential
from .reduction import CorrectionResult, ResidualReport, SolveParams, full_residual, solve_auxiliary

__all__ = [
    "energy_constant_D",
    "ReducedSample",
    "make_lattice",
    "scan_reduced",
    "CriticalPointReport",
    "find_critical_points",
    "brouwer_index",
    "ConcentrationRecord",
    "ConcentrationSeries",
    "concentration_study",
]


def energy_constant_D(p: RadialProfile) -> float:
    """``D = int (W*U^2) U^2 dx`` for a radial profile.

    The grid part uses the radial Newton potential; beyond ``r_max`` the
    potential is the monopole ``M/(4 pi r)`` and the tail
    ``U ~ A r^beta e^{-kappa r}`` is integrated exactly with the incomplete
    gamma function.
    """
    r = p.grid.nodes
    rho = p.values**2
    phi = radial_newton_potential(rho, p.grid)
    core = 4.0 * np.pi * _integrate(phi * rho * r**2, p.grid.h)
    A, kappa, beta = p.tail
    R = p.grid.r_max
    s = 2.0 + 2.0 * beta
    if s <= 0:
        raise ValueError(f"tail exponent beta = {beta} makes the energy tail diverge")
    # int_R^inf r^{1 + 2 beta} e^{-2 kappa r} dr
    tail_moment = gamma(s) * gammaincc(s, 2.0 * kappa * R) / (2.0 * kappa) ** s
    mass = 4.0 * np.pi * _integrate(rho * r**2, p.grid.h)
    return float(core + mass * A * A * tail_moment)


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReducedSample:
    """``Phi_eps`` at one lattice point with its leading-order decomposition.

    Failed solves keep ``phi = nan`` and carry the error message.
    """

    xi: np.ndarray
    phi: float
    leading: float
    remainder: float
    correction: CorrectionResult | None = field(default=None, repr=False)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def row(self) -> dict:
        return {"xi1": self.xi[0], "xi2": self.xi[1], "xi3": self.xi[2], "phi": self.phi,
                "leading": self.leading, "remainder": self.remainder,
                "norm_E": np.nan if self.correction is None else self.correction.norm_E,
                "error": self.error or ""}


def make_lattice(center, count: int, spacing: float) -> np.ndarray:
    """Cubic lattice of ``count^3`` points around ``center`` in lexicographic order, shape ``(count^3, 3)``."""
    if count < 3 or count % 2 == 0:
        raise ValueError("lattice count must be odd and >= 3")
    if not spacing > 0:
        raise ValueError("lattice spacing must be positive")
    t = (np.arange(count) - count // 2) * spacing
    g = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    return g + np.asarray(center, dtype=float)


def _solve_at(p, xi, ctx, params, box_L, box_n, D, w0=None):
    box = Box3(tuple(xi), box_L, box_n)
    ap = build_ansatz(p, xi, ctx, box)
    w_start = None if w0 is None else ScalarField3(box, w0.values)
    res = solve_auxiliary(ap, params=params, w0=w_start)
    phi = energy(ap.z + res.w, ctx)
    leading = 0.25 * ap.a**1.5 * D
    return ReducedSample(np.asarray(xi, dtype=float), phi, leading, phi - leading, res), ap


def scan_reduced(p: RadialProfile, ctx: EpsilonContext, lattice, params: SolveParams = SolveParams(),
                 box_L: float = 16.0, box_n: int = 64, D: float | None = None,
                 workers: int = 1) -> list:
    """Evaluate ``Phi_eps`` on ``lattice`` (fast variable).

    Each solve runs on a box centered at its own ``xi``, so the ansatz sits on
    the same nodes at every lattice point.  The lattice point nearest the
    lattice center is solved first and warm-starts the others; results are
    returned in lattice order and do not depend on ``workers``.  Failing solves
    are recorded per point and the scan continues.
    """
    lattice = np.atleast_2d(np.asarray(lattice, dtype=float))
    D = energy_constant_D(p) if D is None else D
    center = lattice.mean(axis=0)
    first = int(np.argmin(np.linalg.norm(lattice - center, axis=1)))
    leading_of = lambda xi: 0.25 * float(ctx.potential(ctx.eps * xi)) ** 1.5 * D  # noqa: E731

    def run(i, w0):
        xi = lattice[i]
        try:
            return _solve_at(p, xi, ctx, params, box_L, box_n, D, w0)[0]
        except ChoquardError as exc:
            lead = leading_of(xi) if np.linalg.norm(ctx.eps * xi) < 1 else np.nan
            return ReducedSample(xi, np.nan, lead, np.nan, None, f"{type(exc).__name__}: {exc}")

    samples = [None] * len(lattice)
    samples[first] = run(first, None)
    w0 = samples[first].correction.w if samples[first].ok else None
    rest = [i for i in range(len(lattice)) if i != first]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for i, s in zip(rest, pool.map(lambda i: run(i, w0), rest)):
                samples[i] = s
    else:
        for i in rest:
            samples[i] = run(i, w0)
    return samples


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPointReport:
    """A lattice critical point of ``Phi_eps`` and the index of ``grad V`` there."""

    xi: np.ndarray
    x_slow: np.ndarray
    kind: str
    brouwer_index: int
    hessian_eigs: np.ndarray
    grad_norm: float

    def as_dict(self) -> dict:
        return {"xi": self.xi.tolist(), "x_slow": self.x_slow.tolist(), "type": self.kind,
                "brouwer_index": self.brouwer_index, "hessian_eigs": self.hessian_eigs.tolist(),
                "grad_norm": self.grad_norm}


def _sphere_triangulation(count: int = 400):
    """Fibonacci points on the unit sphere with outward-oriented hull triangles."""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    rr = np.sqrt(1.0 - z * z)
    pts = np.column_stack([rr * np.cos(phi), rr * np.sin(phi), z])
    tri = ConvexHull(pts).simplices.copy()
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return pts, tri


def brouwer_index(grad, center, radius: float, count: int = 400) -> int:
    """Degree of ``grad`` on the sphere ``|x - center| = radius``.

    The normalized field is pushed onto the unit sphere and the signed solid
    angles of the image triangles are summed; the total is ``4 pi`` times the
    degree.
    """
    pts, tri = _sphere_triangulation(count)
    g = np.asarray(grad(np.asarray(center) + radius * pts), dtype=float)
    norms = np.linalg.norm(g, axis=1)
    if np.any(norms == 0):
        raise ValueError("gradient vanishes on the sphere; shrink the radius")
    g /= norms[:, None]
    a, b, c = g[tri[:, 0]], g[tri[:, 1]], g[tri[:, 2]]
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    total = 2.0 * np.arctan2(num, den).sum()
    deg = total / (4.0 * np.pi)
    if abs(deg - round(deg)) > 0.05:
        raise ValueError(f"solid-angle sum {deg:.3f} is not close to an integer; refine the sphere")
    return int(round(deg))


def _lattice_array(samples, h: float):
    xi = np.array([s.xi for s in samples])
    origin = xi.min(axis=0)
    idx = np.rint((xi - origin) / h).astype(int)
    if np.max(np.abs(origin + idx * h - xi)) > 1e-6 * h:
        raise ValueError("samples do not lie on a lattice of the given spacing")
    shape = tuple(idx.max(axis=0) + 1)
    if int(np.prod(shape)) != len(samples):
        raise ValueError("samples do not fill a full cubic lattice")
    phi = np.full(shape, np.nan)
    phi[tuple(idx.T)] = [s.phi for s in samples]
    return origin, phi


def find_critical_points(samples, h: float, potential: PotentialSpec, eps: float,
                         tol: float | None = None) -> list:
    """Interior lattice points where the discrete gradient of ``Phi`` vanishes.

    A candidate must be a strict local minimum of the centered-difference
    gradient norm over its 26 neighbors and every gradient component must
    change sign across the neighboring pair along its axis, so a critical
    point lies within one spacing.  ``tol`` optionally also caps the gradient
    norm.  Classification uses the finite-difference Hessian; the index is the
    degree of ``grad V`` on the sphere of radius ``3 eps h`` (slow variable).
    """
    origin, phi = _lattice_array(samples, h)
    if np.any(np.array(phi.shape) < 3):
        raise ValueError("need at least three lattice points per axis")
    grads = np.stack(np.gradient(phi, h), axis=-1)
    gnorm = np.linalg.norm(grads, axis=-1)
    reports = []
    for ijk in np.ndindex(*phi.shape):
        if any(i == 0 or i == n - 1 for i, n in zip(ijk, phi.shape)):
            continue
        i, j, k = ijk
        block = gnorm[i - 1:i + 2, j - 1:j + 2, k - 1:k + 2]
        if not np.all(np.isfinite(block)):
            continue
        g0 = gnorm[ijk]
        others = np.delete(block.ravel(), 13)
        if not np.all(g0 < others):
            continue
        if tol is not None and g0 > tol:
            continue
        change = True
        for ax in range(3):
            lo, hi = list(ijk), list(ijk)
            lo[ax] -= 1
            hi[ax] += 1
            if grads[tuple(lo)][ax] * grads[tuple(hi)][ax] > 0:
                change = False
        if not change:
            continue
        H = _fd_hessian(phi, ijk, h)
        eigs = np.linalg.eigvalsh(H)
        kind = "min" if np.all(eigs > 0) else "max" if np.all(eigs < 0) else "saddle"
        xi = origin + np.array(ijk) * h
        x = eps * xi
        index = brouwer_index(potential.gradient, x, 3.0 * eps * h)
        reports.append(CriticalPointReport(xi, x, kind, index, eigs, float(g0)))
    return reports


def _fd_hessian(phi: np.ndarray, ijk, h: float) -> np.ndarray:
    H = np.empty((3, 3))
    c = np.array(ijk)
    f = lambda off: phi[tuple(c + off)]  # noqa: E731
    e = np.eye(3, dtype=int)
    for a in range(3):
        H[a, a] = (f(e[a]) - 2.0 * f(0 * e[a]) + f(-e[a])) / h**2
        for b in range(a + 1, 3):
            H[a, b] = H[b, a] = (f(e[a] + e[b]) - f(e[a] - e[b]) - f(e[b] - e[a]) + f(-e[a] - e[b])) / (4 * h * h)
    return H


# ---------------------------------------------------------------------------
# concentration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationRecord:
    """Solution ``u_eps = z + w`` at the critical point found at one ``eps``.

    Locations and the width are in the slow variable ``x = eps xi``.
    """

    eps: float
    critical_xi: np.ndarray
    critical_distance: float
    peak_location: np.ndarray
    peak_distance: float
    peak_height: float
    width: float
    norm_E: float
    residual: ResidualReport

    def as_dict(self) -> dict:
        return {"eps": self.eps, "critical_xi": self.critical_xi.tolist(),
                "critical_distance": self.critical_distance,
                "peak_location": self.peak_location.tolist(), "peak_distance": self.peak_distance,
                "peak_height": self.peak_height, "width": self.width, "norm_E": self.norm_E,
                "residual": self.residual.as_dict()}


@dataclass(frozen=True)
class ConcentrationSeries:
    """Concentration records ordered by decreasing ``eps``, with the scans that produced them."""

    records: tuple
    x0: np.ndarray
    target_height: float
    scans: tuple = field(default=(), repr=False)
    criticals: tuple = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {"x0": self.x0.tolist(), "target_height": self.target_height,
                "records": [r.as_dict() for r in self.records],
                "critical_points": [[c.as_dict() for c in cs] for cs in self.criticals]}


def _half_height_width(u: ScalarField3) -> float:
    """Diameter of the ball with the volume of ``{u >= max u / 2}``."""
    vol = np.count_nonzero(u.values >= 0.5 * u.values.max()) * u.box.cell_volume
    return float(2.0 * (3.0 * vol / (4.0 * np.pi)) ** (1.0 / 3.0))


def concentration_study(p: RadialProfile, potential: PotentialSpec, eps_list,
                        params: SolveParams = SolveParams(), lattice_count: int = 3,
                        spacing: float = 1.0, box_L: float = 16.0, box_n: int = 64,
                        truncation=None, workers: int = 1) -> ConcentrationSeries:
    """Scan around ``x0/eps`` for each ``eps`` and record the solution at the critical point.

    Raises
    ------
    ConvergenceError
        No critical point in the scan window at some ``eps``.
    """
    from .fields import TruncationParams

    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list[:-1], eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    x0 = potential.x0
    if x0 is None:
        raise ValueError(f"{potential.family} potential has no distinguished point x0")
    tp = truncation or TruncationParams.default(potential, p.peak)
    D = energy_constant_D(p)
    records, scans, crits = [], [], []
    for eps in eps_list:
        ctx = EpsilonContext(eps, potential, tp)
        lattice = make_lattice(x0 / eps, lattice_count, spacing)
        samples = scan_reduced(p, ctx, lattice, params, box_L, box_n, D, workers)
        scans.append(samples)
        found = find_critical_points(samples, spacing, potential, eps)
        crits.append(found)
        if not found:
            raise ConvergenceError(f"no critical point of the reduced functional near x0 at eps = {eps}")
        best = min(found, key=lambda c: np.linalg.norm(c.x_slow - x0))
        sample = next(s for s in samples if np.allclose(s.xi, best.xi))
        box = Box3(tuple(best.xi), box_L, box_n)
        ap = build_ansatz(p, best.xi, ctx, box)
        u = ap.z + ScalarField3(box, sample.correction.w.values)
        peak = eps * u.argmax_point()
        records.append(ConcentrationRecord(
            eps, best.xi, float(np.linalg.norm(best.x_slow - x0)), peak,
            float(np.linalg.norm(peak - x0)), float(u.max_abs()), eps * _half_height_width(u),
            sample.correction.norm_E, full_residual(u, ctx)))
    target = float(potential(x0) * p.peak)
    return ConcentrationSeries(tuple(records), x0, target, tuple(scans), tuple(crits))
