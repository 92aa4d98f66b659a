"""Fields on a uniform 3D box and the functional I_eps with its derivatives.

Conventions
-----------
A :class:`Box3` with centre ``c``, half-width ``L`` and ``n`` nodes per axis
carries the nodes ``x_i = c - L + i h`` with ``h = 2L/n``; the centre is the
node ``i = n/2``.  Integrals use the trapezoidal rule, which on this grid is
``h^3`` times the node sum (fields vanish at the box edge).

Derivatives are spectral: ``-Delta`` acts diagonally in the discrete Fourier
basis of the box.  The Coulomb potential ``W * rho`` with
``W(x) = 1/(4 pi |x|)`` is a free-space (aperiodic) convolution computed on the
doubled box, with a kernel tabulated from the Fourier transform of ``W``
truncated at the box diameter.  Both choices keep the energy, its gradient and
its Hessian consistent to spectral accuracy, which the reduction needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, cg

from .errors import BoxError, ConvergenceError, TruncationActiveError
from .potentials import PotentialSpec

__all__ = [
    "Box3",
    "ScalarField3",
    "TruncationParams",
    "EpsilonContext",
    "FunctionalAction",
    "transition",
    "coulomb_convolve",
    "neg_laplacian",
    "weighted_inner",
    "e_norm",
    "truncate",
    "energy",
    "gradient",
    "hessian_action",
    "solve_weighted",
    "hls_ratio",
    "hls_verify",
    "box_is_adequate",
    "CUBE_SELF_POTENTIAL",
]

# int over the unit cube centred at 0 of 1/|x|, i.e. 3 ln(2 + sqrt 3) - pi/2
CUBE_SELF_POTENTIAL = 3.0 * np.log(2.0 + np.sqrt(3.0)) - np.pi / 2.0

_WORKERS = 1


def set_workers(n: int) -> None:
    """Number of threads used by the FFTs (results are identical for any count)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


# ---------------------------------------------------------------------------
# grids and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box3:
    """Cube ``center + [-L, L)^3`` with ``n`` nodes per axis (``n`` a power of two, ``n >= 32``)."""

    center: tuple
    L: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise BoxError("box centre must be a 3-vector")
        if not self.L > 0:
            raise BoxError(f"half-width must be positive, got {self.L}")
        if self.n < 32 or self.n & (self.n - 1):
            raise BoxError(f"n must be a power of two >= 32, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def shape(self) -> tuple:
        return (self.n,) * 3

    def axis(self, j: int) -> np.ndarray:
        return self.center[j] - self.L + self.h * np.arange(self.n)

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(n, n, n, 3)``."""
        pts = np.stack(np.meshgrid(*(self.axis(j) for j in range(3)), indexing="ij"), axis=-1)
        pts.setflags(write=False)
        return pts

    def distance_from(self, xi) -> np.ndarray:
        return np.linalg.norm(self.points - np.asarray(xi, dtype=float), axis=-1)

    def zeros(self) -> "ScalarField3":
        return ScalarField3(self, np.zeros(self.shape))

    def field(self, values) -> "ScalarField3":
        return ScalarField3(self, values)

    def nearest_node(self, x) -> tuple:
        idx = np.rint((np.asarray(x, dtype=float) - np.asarray(self.center) + self.L) / self.h)
        return tuple(int(i) for i in np.clip(idx, 0, self.n - 1))


@dataclass(frozen=True, eq=False)
class ScalarField3:
    """Real samples of a function on the nodes of a :class:`Box3`."""

    box: Box3
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.box.shape:
            raise BoxError(f"values have shape {v.shape}, box expects {self.box.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def _check(self, other: "ScalarField3"):
        if other.box != self.box:
            raise BoxError("fields live on different boxes")

    def __add__(self, other):
        self._check(other)
        return ScalarField3(self.box, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return ScalarField3(self.box, self.values - other.values)

    def __mul__(self, c):
        return ScalarField3(self.box, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField3(self.box, -self.values)

    def integrate(self) -> float:
        return float(self.values.sum() * self.box.cell_volume)

    def l2_inner(self, other: "ScalarField3") -> float:
        self._check(other)
        return float(np.vdot(self.values, other.values) * self.box.cell_volume)

    def lp_norm(self, p: float) -> float:
        return float((np.sum(np.abs(self.values) ** p) * self.box.cell_volume) ** (1.0 / p))

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def argmax_point(self) -> np.ndarray:
        idx = np.unravel_index(np.argmax(self.values), self.box.shape)
        return self.box.points[idx].copy()


def box_is_adequate(box: Box3, xi, a_min: float, decay_lengths: float = 12.0) -> bool:
    """``L >= |xi - center|_inf + decay_lengths / sqrt(a_min)``."""
    offset = np.max(np.abs(np.asarray(xi, dtype=float) - np.asarray(box.center)))
    return bool(box.L >= offset + decay_lengths / np.sqrt(a_min))


# ---------------------------------------------------------------------------
# truncation and context
# ---------------------------------------------------------------------------


def transition(s):
    """Smooth cut-off: 1 for ``s <= 1``, 0 for ``s >= 2``, quintic smoothstep between."""
    t = np.clip(np.asarray(s, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True)
class TruncationParams:
    """Level ``cbar`` and decay power ``theta`` of the truncation ``T_eps``."""

    cbar: float
    theta: float

    def __post_init__(self):
        if not (self.cbar > 0 and self.theta > 0):
            raise ValueError("truncation parameters must be positive")

    @classmethod
    def default(cls, potential: PotentialSpec, peak: float) -> "TruncationParams":
        """``cbar = 4 A1 U(0)``, ``theta = max(1, alpha)``."""
        return cls(4.0 * potential.A1 * peak, max(1.0, potential.alpha))


@dataclass(frozen=True)
class EpsilonContext:
    """The semiclassical parameter together with V and the truncation."""

    eps: float
    potential: PotentialSpec
    truncation: TruncationParams

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")

    def potential_on(self, box: Box3) -> np.ndarray:
        """``V(eps x)`` at the nodes of ``box`` (cached, read-only)."""
        return _potential_on(self.potential, self.eps, box)


@lru_cache(maxsize=16)
def _potential_on(potential: PotentialSpec, eps: float, box: Box3) -> np.ndarray:
    v = potential(eps * box.points)
    v.setflags(write=False)
    return v


# ---------------------------------------------------------------------------
# spectral Laplacian and inner products
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _ksq(n: int, h: float):
    """``|k|^2`` on the rfft grid and Parseval weights for the half spectrum."""
    k = 2.0 * np.pi * sfft.fftfreq(n, d=h)
    kz = 2.0 * np.pi * sfft.rfftfreq(n, d=h)
    ksq = k[:, None, None] ** 2 + k[None, :, None] ** 2 + kz[None, None, :] ** 2
    w = np.full(kz.shape, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    ksq.setflags(write=False)
    w.setflags(write=False)
    return ksq, w


def _neg_lap(values: np.ndarray, box: Box3) -> np.ndarray:
    ksq, _ = _ksq(box.n, box.h)
    spec = sfft.rfftn(values, workers=_WORKERS)
    return sfft.irfftn(spec * ksq, s=values.shape, workers=_WORKERS)


def neg_laplacian(u: ScalarField3) -> ScalarField3:
    """Spectral ``-Delta u`` on the periodic extension of the box."""
    return ScalarField3(u.box, _neg_lap(u.values, u.box))


def _dirichlet(u: np.ndarray, v: np.ndarray, box: Box3) -> float:
    """``int grad u . grad v`` through Parseval; symmetric in (u, v) bit for bit."""
    ksq, w = _ksq(box.n, box.h)
    uh = sfft.rfftn(u, workers=_WORKERS)
    vh = uh if v is u else sfft.rfftn(v, workers=_WORKERS)
    prod = uh.real * vh.real + uh.imag * vh.imag
    return float(np.sum(w * np.sum(ksq * prod, axis=(0, 1))) * box.h**3 / box.n**3)


def weighted_inner(u: ScalarField3, v: ScalarField3, ctx: EpsilonContext) -> float:
    """``<u, v>_E = int grad u . grad v + int V(eps x) u v``."""
    u._check(v)
    box = u.box
    V = ctx.potential_on(box)
    local = float(np.sum((u.values * v.values) * V) * box.cell_volume)
    return _dirichlet(u.values, v.values, box) + local


def e_norm(u: ScalarField3, ctx: EpsilonContext) -> float:
    return float(np.sqrt(max(weighted_inner(u, u, ctx), 0.0)))


def _apply_B(values: np.ndarray, box: Box3, V: np.ndarray) -> np.ndarray:
    return _neg_lap(values, box) + V * values


def solve_weighted(rhs: np.ndarray, box: Box3, ctx: EpsilonContext, tol: float = 1e-10,
                   x0: np.ndarray | None = None) -> np.ndarray:
    """Solve ``(-Delta + V(eps x)) g = rhs`` by preconditioned CG.

    The preconditioner is the constant-coefficient inverse ``(-Delta + c)^{-1}``
    with ``c`` the geometric mean of the extreme values of V on the box.
    """
    V = ctx.potential_on(box)
    ksq, _ = _ksq(box.n, box.h)
    c = float(np.sqrt(V.min() * V.max()))
    shape = box.shape
    size = box.n**3

    def mv(x):
        return _apply_B(x.reshape(shape), box, V).ravel()

    def prec(x):
        spec = sfft.rfftn(x.reshape(shape), workers=_WORKERS) / (ksq + c)
        return sfft.irfftn(spec, s=shape, workers=_WORKERS).ravel()

    A = LinearOperator((size, size), matvec=mv, dtype=float)
    M = LinearOperator((size, size), matvec=prec, dtype=float)
    if not np.any(rhs):
        return np.zeros(shape)
    sol, info = cg(A, rhs.ravel(), x0=None if x0 is None else x0.ravel(), rtol=tol, atol=0.0,
                   maxiter=500, M=M)
    if info != 0:
        raise ConvergenceError(f"weighted solve did not converge (info={info})")
    return sol.reshape(shape)


# ---------------------------------------------------------------------------
# Coulomb convolution
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4)
def _kernel_hat(n: int, h: float, kind: str) -> np.ndarray:
    """rfft of the ``1/(4 pi |x|)`` table on the doubled (2n)^3 periodic grid."""
    m = 2 * n
    idx = np.arange(n + 1)
    if kind == "spectral":
        # truncated kernel W 1_{|x|<R}: its transform (1 - cos kR)/k^2 is smooth,
        # sampled on a 4n-periodic grid and brought back with a type-I DCT
        big = 4 * n
        period = big * h
        R = np.sqrt(3.0) * n * h
        k1 = 2.0 * np.pi * np.arange(2 * n + 1) / period
        ksq = k1[:, None, None] ** 2 + k1[None, :, None] ** 2 + k1[None, None, :] ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ghat = (1.0 - np.cos(np.sqrt(ksq) * R)) / ksq
        ghat[0, 0, 0] = R * R / 2.0
        g_half = sfft.dctn(ghat, type=1, workers=_WORKERS) / period**3
        g = g_half[: n + 1, : n + 1, : n + 1]
    elif kind == "cell_average":
        r = h * np.sqrt(idx[:, None, None] ** 2 + idx[None, :, None] ** 2 + idx[None, None, :] ** 2)
        with np.errstate(divide="ignore"):
            g = 1.0 / (4.0 * np.pi * r)
        # mean of 1/(4 pi |x|) over the cell at the origin
        g[0, 0, 0] = CUBE_SELF_POTENTIAL / (4.0 * np.pi * h)
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    # reflect offsets 0..n onto the 2n-periodic grid (offset n is never used)
    wrap = np.concatenate([idx, idx[n - 1 : 0 : -1]])
    table = g[np.ix_(wrap, wrap, wrap)]
    khat = sfft.rfftn(table * h**3, workers=_WORKERS)
    khat.setflags(write=False)
    assert table.shape == (m, m, m)
    return khat


def _convolve(values: np.ndarray, box: Box3, kind: str = "spectral") -> np.ndarray:
    n = box.n
    m = 2 * n
    khat = _kernel_hat(n, box.h, kind)
    # zero padding is applied axis by axis so that no transform runs over
    # rows known to vanish, and only the first n outputs per axis are kept
    spec = sfft.rfft(values, n=m, axis=2, workers=_WORKERS)
    spec = sfft.fft(spec, n=m, axis=1, workers=_WORKERS, overwrite_x=True)
    spec = sfft.fft(spec, n=m, axis=0, workers=_WORKERS, overwrite_x=True)
    spec *= khat
    spec = sfft.ifft(spec, axis=0, workers=_WORKERS, overwrite_x=True)[:n]
    spec = sfft.ifft(spec, axis=1, workers=_WORKERS)[:, :n]
    return sfft.irfft(spec, n=m, axis=2, workers=_WORKERS)[:, :, :n]


def coulomb_convolve(rho: ScalarField3, kernel: str = "spectral") -> ScalarField3:
    """Free-space convolution ``W * rho`` with ``W(x) = 1/(4 pi |x|)``.

    Parameters
    ----------
    rho : ScalarField3
        Density, taken as zero outside the box.
    kernel : {"spectral", "cell_average"}
        ``"spectral"`` tabulates the kernel from its (truncated) Fourier
        transform and is spectrally accurate for smooth densities.
        ``"cell_average"`` samples ``1/(4 pi |x|)`` at the nodes and replaces
        the singular origin value by the cell average; it is only second-order
        accurate and kept for comparison.
    """
    return ScalarField3(rho.box, _convolve(rho.values, rho.box, kernel))


# ---------------------------------------------------------------------------
# truncation, energy and derivatives
# ---------------------------------------------------------------------------


def _envelope(box: Box3, ctx: EpsilonContext) -> np.ndarray:
    """``cbar (1 + eps |x|)^{-theta}`` at the nodes."""
    tp = ctx.truncation
    r = np.linalg.norm(box.points, axis=-1)
    return tp.cbar * (1.0 + ctx.eps * r) ** (-tp.theta)


def truncate(u: ScalarField3, ctx: EpsilonContext) -> tuple[ScalarField3, bool]:
    """Apply ``T_eps``; the flag reports whether the cut-off changed anything."""
    env = _envelope(u.box, ctx)
    s = np.abs(u.values) / env
    if np.all(s <= 1.0):
        return u, False
    ups = transition(s)
    out = ups * u.values + (1.0 - ups) * env
    return ScalarField3(u.box, out), bool(np.any(ups < 1.0))


def energy(u: ScalarField3, ctx: EpsilonContext) -> float:
    """``I_eps(u) = 1/2 |u|_E^2 - 1/4 int (W * (Tu)^2) (Tu)^2``."""
    tu, _ = truncate(u, ctx)
    rho = tu.values**2
    quartic = float(np.sum(_convolve(rho, u.box) * rho) * u.box.cell_volume)
    return 0.5 * weighted_inner(u, u, ctx) - 0.25 * quartic


@dataclass(frozen=True, eq=False)
class FunctionalAction:
    """A bounded linear functional ``v -> int R v`` given by its L^2 density ``R``.

    ``riesz()`` returns the E-representer ``g`` with ``<g, v>_E = int R v``,
    and ``dual_norm`` is ``|g|_E``.
    """

    density: ScalarField3
    ctx: EpsilonContext
    lin_tol: float = 1e-10

    def __call__(self, v: ScalarField3) -> float:
        return self.density.l2_inner(v)

    @cached_property
    def _riesz(self) -> ScalarField3:
        box = self.density.box
        return ScalarField3(box, solve_weighted(self.density.values, box, self.ctx, self.lin_tol))

    def riesz(self) -> ScalarField3:
        return self._riesz

    @property
    def dual_norm(self) -> float:
        return float(np.sqrt(max(self.density.l2_inner(self._riesz), 0.0)))


def _require_inactive(u: ScalarField3, ctx: EpsilonContext):
    if truncate(u, ctx)[1]:
        raise TruncationActiveError(
            "field exceeds the truncation level; decrease eps or the correction radius"
        )


def gradient_density(u: ScalarField3, ctx: EpsilonContext) -> np.ndarray:
    """L^2 density ``(-Delta + V(eps x)) u - (W * u^2) u`` of ``grad I_eps(u)``."""
    box = u.box
    V = ctx.potential_on(box)
    return _apply_B(u.values, box, V) - _convolve(u.values**2, box) * u.values


def gradient(u: ScalarField3, ctx: EpsilonContext, lin_tol: float = 1e-10):
    """First derivative of ``I_eps`` at ``u`` in the truncation-inactive regime.

    Returns
    -------
    action : FunctionalAction
        ``v -> <u, v>_E - int (W * u^2) u v``.
    e_gradient : ScalarField3
        The E-representer of ``action``; ``|e_gradient|_E`` is the dual norm.
    """
    _require_inactive(u, ctx)
    action = FunctionalAction(ScalarField3(u.box, gradient_density(u, ctx)), ctx, lin_tol)
    return action, action.riesz()


def hessian_density(base: ScalarField3, v: ScalarField3, ctx: EpsilonContext,
                    coulomb_base: np.ndarray | None = None) -> np.ndarray:
    """L^2 density of ``I''(base) v``: ``Bv - (W*base^2) v - 2 base W*(base v)``."""
    box = base.box
    V = ctx.potential_on(box)
    if coulomb_base is None:
        coulomb_base = _convolve(base.values**2, box)
    return (
        _apply_B(v.values, box, V)
        - coulomb_base * v.values
        - 2.0 * base.values * _convolve(base.values * v.values, box)
    )


def hessian_action(base: ScalarField3, v: ScalarField3, ctx: EpsilonContext,
                   lin_tol: float = 1e-10) -> FunctionalAction:
    """``w -> <v, w>_E - int (W*base^2) v w - 2 int W*(base v) base w``."""
    base._check(v)
    _require_inactive(base, ctx)
    return FunctionalAction(ScalarField3(base.box, hessian_density(base, v, ctx)), ctx, lin_tol)


# ---------------------------------------------------------------------------
# Hardy-Littlewood-Sobolev
# ---------------------------------------------------------------------------


def hls_ratio(f: np.ndarray, g: np.ndarray, box: Box3) -> float:
    """``int f (W*g) / (|f|_{6/5} |g|_{6/5})`` for arrays on ``box``."""
    dv = box.cell_volume
    nf = (np.sum(np.abs(f) ** 1.2) * dv) ** (5.0 / 6.0)
    ng = (np.sum(np.abs(g) ** 1.2) * dv) ** (5.0 / 6.0)
    if nf == 0 or ng == 0:
        raise ValueError("HLS ratio needs nonzero fields")
    return float(np.sum(f * _convolve(g, box)) * dv / (nf * ng))


def hls_verify(f: ScalarField3, g: ScalarField3) -> float:
    """HLS ratio ``(int int f(x) g(y)/|x-y|) / (4 pi |f|_{6/5} |g|_{6/5})``.

    Bounded above by the sharp constant divided by ``4 pi`` (about 0.1826).
    """
    f._check(g)
    return hls_ratio(f.values, g.values, f.box)
