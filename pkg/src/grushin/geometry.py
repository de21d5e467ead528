"""Anisotropic geometry of the Baouendi-Grushin setting.

A point lives in R^m x R^k and is written (z, t).  The family of
dilations delta_lam(z, t) = (lam z, lam^{gamma+1} t) makes the gauge

    rho(z, t) = (|z|^{2(gamma+1)} + (gamma+1)^2 |t|^2)^{1/(2(gamma+1))}

homogeneous of degree one, and the angle function

    psi(z, t) = |z|^{2 gamma} / rho^{2 gamma}

homogeneous of degree zero.  The homogeneous dimension Q = m + (gamma+1) k
governs volume scaling: Lebesgue measure of a gauge ball B_r scales as r^Q.
The generator of the dilations is the vector field

    Z = sum_i z_i d/dz_i + (gamma+1) sum_j t_j d/dt_j,

so that Z rho = rho and Z psi = 0.

All functions here are pure and vectorised: ``z`` has shape (..., m) and
``t`` has shape (..., k); scalar convenience wrappers accept a Point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GrushinSpace",
    "Point",
    "gauge",
    "angle",
    "gauge_and_angle",
    "dilate",
    "generator_coefficients",
    "generator_apply",
    "sample_annulus",
]


class DimensionError(ValueError):
    """A point does not match the (m, k) layout of its space."""


class DegeneratePointError(ValueError):
    """Operation requested at a point where the formulas are singular."""


@dataclass(frozen=True)
class GrushinSpace:
    """Ambient structure: z-block dimension m, t-block dimension k, exponent gamma.

    k = 0 reduces to the Euclidean case (psi identically 1, rho = |z|).
    """

    m: int
    k: int
    gamma: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")

    @property
    def N(self) -> int:
        return self.m + self.k

    @property
    def Q(self) -> float:
        """Homogeneous dimension m + (gamma+1) k."""
        return self.m + (self.gamma + 1.0) * self.k

    def check_arrays(self, z: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        t = np.asarray(t, dtype=float)
        if z.shape[-1:] != (self.m,):
            raise DimensionError(f"z has trailing shape {z.shape[-1:]}, expected ({self.m},)")
        if self.k == 0:
            if t.size != 0 and t.shape[-1:] != (0,):
                raise DimensionError("k = 0 space expects an empty t block")
            t = np.zeros(z.shape[:-1] + (0,))
        elif t.shape[-1:] != (self.k,):
            raise DimensionError(f"t has trailing shape {t.shape[-1:]}, expected ({self.k},)")
        return z, t


@dataclass(frozen=True)
class Point:
    """A single point (z, t); z has length m, t has length k."""

    z: np.ndarray
    t: np.ndarray

    def __init__(self, z, t=()):
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(z, dtype=float)))
        object.__setattr__(self, "t", np.atleast_1d(np.asarray(t, dtype=float)) if np.size(t) else np.zeros(0))

    def batch(self) -> tuple[np.ndarray, np.ndarray]:
        return self.z[None, :], self.t[None, :]


def _zr(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(z * z, axis=-1))


def gauge(space: GrushinSpace, z, t) -> np.ndarray:
    """Pseudo-gauge rho; 0 exactly at the origin."""
    z, t = space.check_arrays(z, t)
    g1 = space.gamma + 1.0
    return (np.sum(z * z, axis=-1) ** g1 + g1 ** 2 * np.sum(t * t, axis=-1)) ** (1.0 / (2.0 * g1))


def angle(space: GrushinSpace, z, t) -> np.ndarray:
    """Angle function psi = |z|^{2 gamma} / rho^{2 gamma} in [0, 1].

    Vanishes on the characteristic set {z = 0}; reported as 0 at the origin
    (the value there is a convention, see ``gauge_and_angle``).
    """
    z, t = space.check_arrays(z, t)
    rho = gauge(space, z, t)
    r = _zr(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.where(rho > 0.0, (np.divide(r, np.where(rho > 0, rho, 1.0))) ** (2.0 * space.gamma), 0.0)
    # r/rho can exceed 1 by an ulp when t = 0
    return np.minimum(psi, 1.0)


def gauge_and_angle(space: GrushinSpace, p: Point) -> tuple[float, float, bool]:
    """Return (rho, psi, defined) at a single point.

    ``defined`` is False only at the exact origin, where rho = 0 and psi has
    no continuous extension; both are then reported as 0 by convention.
    """
    z, t = p.batch()
    rho = float(gauge(space, z, t)[0])
    if rho == 0.0:
        return 0.0, 0.0, False
    psi = float(angle(space, z, t)[0])
    return rho, psi, True


def dilate(space: GrushinSpace, lam: float, z, t) -> tuple[np.ndarray, np.ndarray]:
    """Anisotropic dilation (z, t) -> (lam z, lam^{gamma+1} t)."""
    if lam <= 0:
        raise ValueError(f"dilation parameter must be positive, got {lam}")
    z, t = space.check_arrays(z, t)
    return lam * z, lam ** (space.gamma + 1.0) * t


def generator_coefficients(space: GrushinSpace, z, t) -> np.ndarray:
    """Euclidean coordinate coefficients of Z: (z_1..z_m, (gamma+1) t_1..t_k)."""
    z, t = space.check_arrays(z, t)
    return np.concatenate([z, (space.gamma + 1.0) * t], axis=-1)


def generator_apply(space: GrushinSpace, f, z, t, analytic_gradient=None, h: float = 1e-6) -> np.ndarray:
    """Apply the dilation generator Z to a scalar function.

    With an analytic Euclidean gradient, contracts it against the Z
    coefficients.  Otherwise uses the dilation realisation
    Zf(p) = d/dlam f(delta_lam p) at lam = 1, by central differences.
    """
    z, t = space.check_arrays(z, t)
    if analytic_gradient is not None:
        grad = analytic_gradient(z, t)
        return np.sum(generator_coefficients(space, z, t) * grad, axis=-1)
    zp, tp = dilate(space, 1.0 + h, z, t)
    zm, tm = dilate(space, 1.0 - h, z, t)
    return (f(zp, tp) - f(zm, tm)) / (2.0 * h)


def sample_annulus(
    space: GrushinSpace,
    n: int,
    rho_range=(0.01, 1.0),
    psi_range=(1e-4, 1.0),
    seed: int = 0,
    min_abs_z: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Low-discrepancy cloud in a gauge annulus, stratified in psi.

    Half the cloud draws psi log-uniformly over ``psi_range`` (covering the
    near-characteristic regime where the estimates degenerate), the other
    half uniformly.  Given (rho, psi), the block radii are fixed exactly:
    |z| = rho psi^{1/(2 gamma)} and |t| = rho^{gamma+1} sqrt(1 -
    psi^{(gamma+1)/gamma}) / (gamma+1); directions are drawn uniformly.
    """
    from scipy.stats import qmc

    if space.k == 0:
        rng = np.random.default_rng(seed)
        direc = rng.standard_normal((n, space.m))
        direc /= np.linalg.norm(direc, axis=1, keepdims=True)
        radii = rho_range[0] + (rho_range[1] - rho_range[0]) * qmc.Halton(1, seed=seed).random(n)[:, 0]
        return radii[:, None] * direc, np.zeros((n, 0))

    g = space.gamma
    sampler = qmc.Halton(d=2, seed=seed)
    u = sampler.random(n)
    rho = rho_range[0] + (rho_range[1] - rho_range[0]) * u[:, 0]
    lo, hi = psi_range
    half = n // 2
    psi = np.empty(n)
    psi[:half] = np.exp(np.log(lo) + (np.log(hi) - np.log(lo)) * u[:half, 1])
    psi[half:] = lo + (hi - lo) * u[half:, 1]
    if min_abs_z > 0.0:
        # keep |z| = rho psi^{1/(2 gamma)} above the requested floor
        psi_floor = np.minimum((min_abs_z / rho) ** (2.0 * g), 1.0)
        psi = np.maximum(psi, psi_floor)

    rng = np.random.default_rng(seed + 1)
    dz = rng.standard_normal((n, space.m))
    dz /= np.linalg.norm(dz, axis=1, keepdims=True)
    dt = rng.standard_normal((n, space.k))
    dt /= np.linalg.norm(dt, axis=1, keepdims=True)

    abs_z = rho * psi ** (1.0 / (2.0 * g))
    abs_t = rho ** (g + 1.0) * np.sqrt(np.clip(1.0 - psi ** ((g + 1.0) / g), 0.0, None)) / (g + 1.0)
    return abs_z[:, None] * dz, abs_t[:, None] * dt
