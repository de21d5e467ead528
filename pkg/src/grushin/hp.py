"""Quad-precision fallback path (mpmath) for oracle cross-checks.

Double-precision nested differences lose digits on third derivatives near
small |z|; this module re-evaluates the gauge and nested X-derivatives at
50 significant digits for small point sets, where rounding is a non-issue
and tiny steps can be used.  Slow by design; intended for spot checks and
for freezing reference values in tests.
"""

from __future__ import annotations

import mpmath as mp

from .geometry import GrushinSpace

__all__ = ["rho_hp", "psi_hp", "x_fd_hp", "eval_hp"]


def rho_hp(space: GrushinSpace, z, t):
    g1 = mp.mpf(space.gamma) + 1
    r2 = mp.fsum(mp.mpf(v) ** 2 for v in z)
    t2 = mp.fsum(mp.mpf(v) ** 2 for v in t)
    return (r2 ** g1 + g1 ** 2 * t2) ** (1 / (2 * g1))


def psi_hp(space: GrushinSpace, z, t):
    g = mp.mpf(space.gamma)
    r2 = mp.fsum(mp.mpf(v) ** 2 for v in z)
    return (mp.sqrt(r2) / rho_hp(space, z, t)) ** (2 * g)


def eval_hp(fn, space: GrushinSpace, z, t, dps: int = 50):
    with mp.workdps(dps):
        return fn(space, [mp.mpf(v) for v in z], [mp.mpf(v) for v in t])


def x_fd_hp(space: GrushinSpace, f, z, t, indices, h: float = 1e-10, dps: int = 50) -> float:
    """Nested central differences at one point in high precision.

    f(space, z_list, t_list) -> mpf, with z_list/t_list mpf lists.  Same
    outer-first index convention as oracle.x_fd.  No Richardson pass is
    needed: at 50 digits the rounding floor sits far below h^2.
    """
    with mp.workdps(dps):
        hh = mp.mpf(h)
        zm = [mp.mpf(v) for v in z]
        tm = [mp.mpf(v) for v in t]

        def rec(idx, zz, tt):
            if not idx:
                return f(space, zz, tt)
            i, rest = idx[0], idx[1:]
            if i < space.m:
                zp = list(zz)
                zp[i] = zp[i] + hh
                zq = list(zz)
                zq[i] = zq[i] - hh
                return (rec(rest, zp, tt) - rec(rest, zq, tt)) / (2 * hh)
            j = i - space.m
            tp = list(tt)
            tp[j] = tp[j] + hh
            tq = list(tt)
            tq[j] = tq[j] - hh
            fac = mp.fsum(v ** 2 for v in zz) ** (mp.mpf(space.gamma) / 2)
            return fac * (rec(rest, zz, tp) - rec(rest, zz, tq)) / (2 * hh)

        return float(rec(tuple(int(i) for i in indices), zm, tm))
