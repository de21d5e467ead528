"""Closed-form derivative ladder of the gauge rho and the angle psi.

The vector fields are X_i = d/dz_i for i < m and X_{m+j} = |z|^gamma d/dt_j,
and they do not commute, so derivative order matters: everywhere in this
module ``hess[a, b] = X_a(X_b rho)`` with a the OUTER index, and
``third[r, a, b] = X_r(X_a(X_b rho))`` with r outermost.  In particular
hess[i, m+j] != hess[m+j, i] in general; the two mixed blocks differ by
gamma (gamma+1) z_i t_j |z|^{-gamma-2} psi / rho.

First derivatives:

    X_l rho = psi z_l / rho                          (l <= m)
    X_l rho = (gamma+1) psi^{1/2} t_{l-m} / rho^{gamma+1}   (l > m)

so that |X rho|^2 = psi exactly.  Every second derivative has the shape
P1 * psi^2/rho^3 + P2 * psi/rho with block-dependent prefactors P1, P2
polynomial in (z, t, |z|), and the third derivatives follow by the product
rule using

    X_r (psi^2/rho^3), X_r (psi/rho)

in closed form; those two factors are shared by all eight (r; a, b) block
cases.  All formulas require z != 0 and rho != 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DegeneratePointError, GrushinSpace

__all__ = ["GaugeJets", "gauge_jets", "psi_gradient"]


@dataclass
class GaugeJets:
    """Derivative ladder of rho at a batch of points.

    grad:     (n, N)        X_l rho
    hess:     (n, N, N)     X_a X_b rho, a outer
    third:    (n, N, N, N)  X_r X_a X_b rho, r outermost (None unless requested)
    psi_grad: (n, N)        X_l psi
    """

    rho: np.ndarray
    psi: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    psi_grad: np.ndarray
    third: np.ndarray | None = None


def _prepare(space: GrushinSpace, z, t):
    z, t = space.check_arrays(z, t)
    if z.ndim == 1:
        z, t = z[None, :], t[None, :]
    r2 = np.sum(z * z, axis=-1)
    if np.any(r2 == 0.0):
        raise DegeneratePointError("gauge jets require z != 0 (characteristic set excluded)")
    g = space.gamma
    g1 = g + 1.0
    rho = (r2 ** g1 + g1 ** 2 * np.sum(t * t, axis=-1)) ** (1.0 / (2.0 * g1))
    r = np.sqrt(r2)
    psi = np.minimum((r / rho) ** (2.0 * g), 1.0)
    return z, t, r, rho, psi


def psi_gradient(space: GrushinSpace, z, t) -> np.ndarray:
    """X-gradient of the angle function psi; requires z != 0."""
    z, t, r, rho, psi = _prepare(space, z, t)
    g = space.gamma
    n = z.shape[0]
    out = np.empty((n, space.N))
    out[:, : space.m] = (2.0 * g * psi / (r * r) - 2.0 * g * psi ** 2 / rho ** 2)[:, None] * z
    if space.k:
        out[:, space.m:] = (-2.0 * g * (g + 1.0) * psi * r ** g / rho ** (2.0 * g + 2.0))[:, None] * t
    return out


def gauge_jets(space: GrushinSpace, z, t, order: int = 2) -> GaugeJets:
    """Evaluate the ladder at a batch of points; order 3 adds the full third tensor.

    The third tensor costs O(N^3) per point; callers that need only a few
    (r, a, b) entries should slice lazily via order=2 plus `_third_entry`.
    """
    z, t, r, rho, psi = _prepare(space, z, t)
    g = space.gamma
    g1 = g + 1.0
    m, k, N = space.m, space.k, space.N
    n = z.shape[0]

    grad = np.empty((n, N))
    grad[:, :m] = (psi / rho)[:, None] * z
    if k:
        grad[:, m:] = (g1 * np.sqrt(psi) / rho ** g1)[:, None] * t

    p2r3 = psi ** 2 / rho ** 3
    p_r = psi / rho

    hess = np.empty((n, N, N))
    # z-z block: symmetric
    zz = z[:, :, None] * z[:, None, :]
    eye_m = np.eye(m)
    hess[:, :m, :m] = (
        -(2 * g + 1) * zz * p2r3[:, None, None]
        + (2 * g * zz / (r * r)[:, None, None] + eye_m) * p_r[:, None, None]
    )
    if k:
        zt = z[:, :, None] * t[:, None, :]
        # X_i X_{m+b} rho (outer z-derivative of the t-component): carries a psi/rho term
        hess[:, :m, m:] = (
            -(2 * g + 1) * g1 * zt * (p2r3 / r ** g)[:, None, None]
            + g * g1 * zt * (p_r / r ** (g + 2.0))[:, None, None]
        )
        # X_{m+a} X_i rho: t-derivative applied second kills the psi/rho term
        hess[:, m:, :m] = -(2 * g + 1) * g1 * np.swapaxes(zt, 1, 2) * (p2r3 / r ** g)[:, None, None]
        tt = t[:, :, None] * t[:, None, :]
        hess[:, m:, m:] = (
            -(2 * g + 1) * g1 ** 2 * tt * (p2r3 / r ** (2.0 * g))[:, None, None]
            + g1 * np.eye(k) * p_r[:, None, None]
        )

    pg = np.empty((n, N))
    pg[:, :m] = (2.0 * g * psi / (r * r) - 2.0 * g * psi ** 2 / rho ** 2)[:, None] * z
    if k:
        pg[:, m:] = (-2.0 * g * g1 * psi * r ** g / rho ** (2.0 * g + 2.0))[:, None] * t

    third = None
    if order >= 3:
        third = np.empty((n, N, N, N))
        pre = _third_shared(space, z, t, r, rho, psi)
        for rr in range(N):
            for a in range(N):
                for b in range(N):
                    third[:, rr, a, b] = _third_entry(space, pre, rr, a, b)

    return GaugeJets(rho=rho, psi=psi, grad=grad, hess=hess, psi_grad=pg, third=third)


def _third_shared(space, z, t, r, rho, psi):
    g = space.gamma
    g1 = g + 1.0
    p2r3 = psi ** 2 / rho ** 3
    p_r = psi / rho
    sq = np.sqrt(psi)
    shared = {
        "z": z, "t": t, "r": r, "rho": rho, "psi": psi,
        "p2r3": p2r3, "p_r": p_r,
        # X_r(psi^2/rho^3) split into its z-index coefficient and t-index coefficient
        "d_p2r3_z": p2r3 * (4.0 * g / r ** 2 - (4.0 * g + 3.0) * psi / rho ** 2),
        "d_p2r3_t": -g1 * psi ** 2 / rho ** (2.0 * g + 5.0) * (4.0 * g * r ** g + 3.0 * rho ** g * sq),
        # X_r(psi/rho) likewise
        "d_pr_z": p_r * (2.0 * g / r ** 2 - (2.0 * g + 1.0) * psi / rho ** 2),
        "d_pr_t": -g1 * psi / rho ** (2.0 * g + 3.0) * (2.0 * g * r ** g + rho ** g * sq),
    }
    return shared


def _third_entry(space: GrushinSpace, pre: dict, rr: int, a: int, b: int) -> np.ndarray:
    """One entry X_rr X_a X_b rho of the third tensor, as a (n,) array."""
    g = space.gamma
    g1 = g + 1.0
    m = space.m
    z, t, r = pre["z"], pre["t"], pre["r"]
    p2r3, p_r = pre["p2r3"], pre["p_r"]

    if a < m and b < m:
        za, zb = z[:, a], z[:, b]
        P1 = -(2 * g + 1) * za * zb
        P2 = 2.0 * g * za * zb / r ** 2 + (1.0 if a == b else 0.0)
        if rr < m:
            zr = z[:, rr]
            dP1 = -(2 * g + 1) * ((zb if rr == a else 0.0) + (za if rr == b else 0.0))
            dP2 = 2.0 * g * (
                ((zb if rr == a else 0.0) + (za if rr == b else 0.0)) / r ** 2
                - 2.0 * za * zb * zr / r ** 4
            )
        else:
            dP1 = 0.0
            dP2 = 0.0
    elif a < m and b >= m:
        za, tb = z[:, a], t[:, b - m]
        P1 = -(2 * g + 1) * g1 * za * tb * r ** (-g)
        P2 = g * g1 * za * tb * r ** (-g - 2.0)
        if rr < m:
            zr = z[:, rr]
            dP1 = -(2 * g + 1) * g1 * tb * ((r ** (-g) if rr == a else 0.0) - g * za * zr * r ** (-g - 2.0))
            dP2 = g * g1 * tb * ((r ** (-g - 2.0) if rr == a else 0.0) - (g + 2.0) * za * zr * r ** (-g - 4.0))
        else:
            s = rr - m
            dP1 = -(2 * g + 1) * g1 * za * (1.0 if s == b - m else 0.0)
            dP2 = g * g1 * za * (1.0 if s == b - m else 0.0) * r ** (-2.0)
    elif a >= m and b < m:
        ta, zb = t[:, a - m], z[:, b]
        P1 = -(2 * g + 1) * g1 * zb * ta * r ** (-g)
        P2 = 0.0
        if rr < m:
            zr = z[:, rr]
            dP1 = -(2 * g + 1) * g1 * ta * ((r ** (-g) if rr == b else 0.0) - g * zb * zr * r ** (-g - 2.0))
        else:
            dP1 = -(2 * g + 1) * g1 * zb * (1.0 if rr - m == a - m else 0.0)
        dP2 = 0.0
    else:
        ta, tb = t[:, a - m], t[:, b - m]
        P1 = -(2 * g + 1) * g1 ** 2 * ta * tb * r ** (-2.0 * g)
        P2 = g1 * (1.0 if a == b else 0.0)
        if rr < m:
            zr = z[:, rr]
            dP1 = 2.0 * g * (2 * g + 1) * g1 ** 2 * ta * tb * zr * r ** (-2.0 * g - 2.0)
        else:
            s = rr - m
            dP1 = -(2 * g + 1) * g1 ** 2 * (
                (tb if s == a - m else 0.0) + (ta if s == b - m else 0.0)
            ) * r ** (-g)
        dP2 = 0.0

    if rr < m:
        zr = z[:, rr]
        d_p2r3 = pre["d_p2r3_z"] * zr
        d_pr = pre["d_pr_z"] * zr
    else:
        ts = t[:, rr - m]
        d_p2r3 = pre["d_p2r3_t"] * ts
        d_pr = pre["d_pr_t"] * ts

    return np.asarray(dP1 * p2r3 + P1 * d_p2r3 + dP2 * p_r + P2 * d_pr)
