"""Electric potentials V with the bounds the existence theory needs.

Every potential carries constants ``A0, A1, alpha, V1`` such that

    A0 / (1 + |x|^alpha) <= V(x) <= A1,      |grad V(x)| <= V1,

and these bounds are checked on a verification lattice when the potential is
built.  Families are identified by a tag plus a tuple of parameters so that
instances are hashable and can key caches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import PotentialSpecError

__all__ = ["PotentialSpec", "make_potential", "FAMILIES"]

FAMILIES = ("min_bump", "max_bump", "pure_decay", "constant")

_DEFAULTS = {
    "min_bump": {"A1": 2.0, "b": 0.5, "s": 1.0, "alpha": 1.0, "x0": (0.0, 0.0, 0.0), "scale": 2.0},
    "max_bump": {"A1": 1.0, "b": 0.5, "s": 1.0, "alpha": 1.0, "x0": (0.0, 0.0, 0.0), "scale": 2.0},
    "pure_decay": {"A1": 1.0, "alpha": 1.0, "scale": 2.0},
    "constant": {"value": 1.0},
}


def _lattice(radius: float = 30.0) -> np.ndarray:
    """Verification points: a dense cube near the origin plus radial rays far out."""
    t = np.linspace(-3.0, 3.0, 13)
    cube = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    rng = np.random.default_rng(20240611)
    dirs = rng.normal(size=(64, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.geomspace(0.05, radius, 40)
    rays = (dirs[:, None, :] * radii[None, :, None]).reshape(-1, 3)
    return np.concatenate([cube, rays])


@dataclass(frozen=True)
class PotentialSpec:
    """A potential ``V`` from one of the builtin families.

    Families (``r = |x - x0| / scale``):

    ``min_bump``
        ``A1 (1 + r^2)^{-alpha/2} (1 - b exp(-r^2/s^2))``, an isolated strict
        minimum at ``x0`` when ``b/s^2 > alpha (1 - b)/2``.
    ``max_bump``
        ``A1 (1 + r^2)^{-alpha/2} (1 + b exp(-r^2/s^2)) / (1 + b)``, an isolated
        strict maximum at ``x0``.
    ``pure_decay``
        ``A1 (1 + |x/scale|^2)^{-alpha/2}``, radially decreasing, used for null tests.
    ``constant``
        ``V = value``.

    Use :func:`make_potential` to build instances from keyword parameters.
    """

    family: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PotentialSpecError(f"unknown potential family {self.family!r}")
        p = self.param_dict
        alpha = self.alpha
        if not 0.0 <= alpha <= 2.0:
            raise PotentialSpecError(f"alpha must lie in [0, 2], got {alpha}")
        if self.family in ("min_bump", "max_bump"):
            if not 0.0 < p["b"] < 1.0 or p["s"] <= 0 or p["A1"] <= 0:
                raise PotentialSpecError("bump potentials need 0 < b < 1, s > 0, A1 > 0")
            if len(p["x0"]) != 3:
                raise PotentialSpecError("x0 must be a 3-vector")
        if p.get("scale", 1.0) <= 0:
            raise PotentialSpecError("scale must be positive")
        if self.family == "constant" and p["value"] <= 0:
            raise PotentialSpecError("constant potential must be positive")
        self._verify()

    # -- parameters ---------------------------------------------------------

    @property
    def param_dict(self) -> dict:
        d = dict(_DEFAULTS[self.family])
        d.update(dict(self.params))
        if "x0" in d:
            d["x0"] = tuple(float(c) for c in d["x0"])
        return d

    @property
    def alpha(self) -> float:
        return 0.0 if self.family == "constant" else float(self.param_dict["alpha"])

    @property
    def x0(self) -> np.ndarray | None:
        """Distinguished critical point of V, if the family has one."""
        p = self.param_dict
        return np.array(p["x0"]) if "x0" in p else None

    @property
    def kind(self) -> str | None:
        return {"min_bump": "min", "max_bump": "max"}.get(self.family)

    @property
    def A1(self) -> float:
        p = self.param_dict
        return float(p["value"] if self.family == "constant" else p["A1"])

    @property
    def A0(self) -> float:
        """Constant in the lower bound ``V >= A0/(1 + |x|^alpha)``.

        Uses ``(1 + |d|^2/l^2)^{alpha/2} <= max(1, l^{-alpha}) (1 + |d|)^alpha`` and
        ``(1 + |x - x0|)^alpha <= 2^{2 max(alpha-1,0)} (1 + |x0|^alpha) (1 + |x|^alpha)``.
        """
        p = self.param_dict
        if self.family == "constant":
            return float(p["value"])
        alpha = p["alpha"]
        base = p["A1"]
        if self.family == "min_bump":
            base *= 1.0 - p["b"]
        elif self.family == "max_bump":
            base /= 1.0 + p["b"]
        shift = np.linalg.norm(p.get("x0", (0.0, 0.0, 0.0)))
        # the triangle inequality costs one more factor when x0 != 0
        c = 2.0 ** max(alpha - 1.0, 0.0) * max(1.0, p["scale"] ** (-alpha))
        if shift > 0:
            c *= 2.0 ** max(alpha - 1.0, 0.0) * (1.0 + shift**alpha)
        return float(base / c)

    @cached_property
    def V1(self) -> float:
        """Sampled ``sup |grad V|`` with a 5% safety margin."""
        if self.family == "constant":
            return 0.0
        pts = [_lattice(40.0)]
        x0 = self.x0
        if x0 is not None:
            t = np.linspace(-4.0, 4.0, 41)
            pts.append(x0 + np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3))
        g = self.gradient(np.concatenate(pts))
        return float(1.05 * np.linalg.norm(g, axis=-1).max())

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        """Evaluate V at points ``x`` of shape ``(..., 3)``."""
        x = np.asarray(x, dtype=float)
        p = self.param_dict
        if self.family == "constant":
            return np.full(x.shape[:-1], float(p["value"]))
        if self.family == "pure_decay":
            y = x / p["scale"]
            return p["A1"] * (1.0 + np.sum(y * y, axis=-1)) ** (-p["alpha"] / 2)
        d = (x - np.asarray(p["x0"])) / p["scale"]
        r2 = np.sum(d * d, axis=-1)
        env = p["A1"] * (1.0 + r2) ** (-p["alpha"] / 2)
        bump = np.exp(-r2 / p["s"] ** 2)
        if self.family == "min_bump":
            return env * (1.0 - p["b"] * bump)
        return env * (1.0 + p["b"] * bump) / (1.0 + p["b"])

    def gradient(self, x) -> np.ndarray:
        """Analytic gradient of V, shape ``(..., 3)``."""
        x = np.asarray(x, dtype=float)
        p = self.param_dict
        if self.family == "constant":
            return np.zeros_like(x)
        lam = p["scale"]
        if self.family == "pure_decay":
            y = x / lam
            r2 = np.sum(y * y, axis=-1)[..., None]
            return -p["alpha"] * p["A1"] * (1.0 + r2) ** (-p["alpha"] / 2 - 1) * y / lam
        d = (x - np.asarray(p["x0"])) / lam
        r2 = np.sum(d * d, axis=-1)[..., None]
        a, b, s2 = p["alpha"], p["b"], p["s"] ** 2
        env = p["A1"] * (1.0 + r2) ** (-a / 2)
        denv = -a * env / (1.0 + r2) * d
        bump = np.exp(-r2 / s2)
        dbump = -2.0 * bump / s2 * d
        if self.family == "min_bump":
            return (denv * (1.0 - b * bump) - env * b * dbump) / lam
        return (denv * (1.0 + b * bump) + env * b * dbump) / ((1.0 + b) * lam)

    def hessian(self, x, step: float = 1e-4) -> np.ndarray:
        """Hessian by centered differences of the analytic gradient."""
        x = np.asarray(x, dtype=float)
        H = np.empty(x.shape[:-1] + (3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = step
            H[..., :, j] = (self.gradient(x + e) - self.gradient(x - e)) / (2 * step)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def scaled(self, c: float) -> "PotentialSpec":
        """The potential ``c V`` (same family, amplitude multiplied by ``c``)."""
        key = "value" if self.family == "constant" else "A1"
        p = dict(self.params)
        p[key] = self.param_dict[key] * c
        return make_potential(self.family, **p)

    # -- checks -------------------------------------------------------------

    def bounds_violation(self, x) -> float:
        """Largest relative violation of the two-sided and gradient bounds at ``x``."""
        x = np.asarray(x, dtype=float)
        v = self(x)
        lower = self.A0 / (1.0 + np.linalg.norm(x, axis=-1) ** self.alpha)
        worst = max(np.max((lower - v) / lower), np.max((v - self.A1) / self.A1))
        g = np.linalg.norm(self.gradient(x), axis=-1)
        if self.V1 > 0:
            worst = max(worst, np.max((g - self.V1) / self.V1))
        elif np.any(g > 0):
            worst = np.inf
        return float(worst)

    def _verify(self):
        worst = self.bounds_violation(_lattice())
        if worst > 1e-12:
            raise PotentialSpecError(
                f"{self.family} potential violates its declared bounds by {worst:.3e} (relative)"
            )


def make_potential(family: str, **params) -> PotentialSpec:
    """Build a :class:`PotentialSpec`, e.g. ``make_potential("min_bump", b=0.4)``."""
    if family not in FAMILIES:
        raise PotentialSpecError(f"unknown potential family {family!r}; choose from {FAMILIES}")
    unknown = set(params) - set(_DEFAULTS[family])
    if unknown:
        raise PotentialSpecError(f"unknown parameters for {family}: {sorted(unknown)}")
    items = []
    for k in sorted(params):
        v = params[k]
        if k == "x0":
            v = tuple(float(c) for c in v)
        else:
            v = float(v)
        items.append((k, v))
    return PotentialSpec(family, tuple(items))
