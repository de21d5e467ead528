"""Scalar fields on Grushin space with analytic X-jets.

A ScalarField evaluates pointwise and may carry its first and second
X-derivatives in closed form.  Jets follow the jets-module convention:
gradient component l is X_l f, hessian entry [a, b] is X_a(X_b f) with a
the outer index (the hessian of a generic field is NOT symmetric across
the z/t blocks).

Fields compose: sums and products propagate jets by the product rule,
which holds termwise for noncommuting first-order operators.  Primitives:

    RadialField      phi(rho)        jets via the closed-form gauge ladder
    ZRadialField     phi(|z|)
    FuncOfZ / FuncOfT   phi(z_i) / phi(t_j)
    Const

Test-function families (gauge-radial bumps, angular modulations, tensor
bumps) are assembled from these primitives so that every member carries
exact jets for the operator evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GrushinSpace
from .jets import gauge_jets
from .oracle import x_fd

__all__ = [
    "Profile",
    "ScalarField",
    "Const",
    "RadialField",
    "ZRadialField",
    "FuncOfZ",
    "FuncOfT",
    "psi_field",
    "x_apply",
    "z_frame_coefficients",
    "z_apply",
    "validate_jets",
]


@dataclass(frozen=True)
class Profile:
    """A C^2 function of one variable with explicit first two derivatives."""

    f: object
    d1: object
    d2: object

    @staticmethod
    def power(p: float) -> "Profile":
        return Profile(
            f=lambda r: r ** p,
            d1=lambda r: p * r ** (p - 1.0),
            d2=lambda r: p * (p - 1.0) * r ** (p - 2.0),
        )

    @staticmethod
    def gaussian(scale: float = 1.0) -> "Profile":
        def f(r):
            return np.exp(-(r / scale) ** 2)

        return Profile(
            f=f,
            d1=lambda r: -2.0 * r / scale ** 2 * f(r),
            d2=lambda r: (4.0 * r ** 2 / scale ** 4 - 2.0 / scale ** 2) * f(r),
        )

    @staticmethod
    def poly_bump(a: float, b: float, p: int = 3, q: int = 3) -> "Profile":
        """Bump (r-a)^p (b-r)^q on [a, b], zero outside, normalised to peak 1.

        p, q >= 3 gives two continuous derivatives across the endpoints.
        """
        if not (a < b):
            raise ValueError("bump needs a < b")
        if min(p, q) < 3:
            raise ValueError("p, q >= 3 required for C^2 matching at the endpoints")
        rstar = (p * b + q * a) / (p + q)
        peak = (rstar - a) ** p * (b - rstar) ** q

        def inside(r):
            return (r > a) & (r < b)

        def f(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            msk = inside(r)
            out[msk] = (r[msk] - a) ** p * (b - r[msk]) ** q / peak
            return out

        def d1(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            msk = inside(r)
            u, v = r[msk] - a, b - r[msk]
            out[msk] = (p * u ** (p - 1) * v ** q - q * u ** p * v ** (q - 1)) / peak
            return out

        def d2(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            msk = inside(r)
            u, v = r[msk] - a, b - r[msk]
            out[msk] = (
                p * (p - 1) * u ** (p - 2) * v ** q
                - 2.0 * p * q * u ** (p - 1) * v ** (q - 1)
                + q * (q - 1) * u ** p * v ** (q - 2)
            ) / peak
            return out

        return Profile(f=f, d1=d1, d2=d2)


class ScalarField:
    """Base class; subclasses fill in value and, when available, jets."""

    grad_available = False
    hess_available = False

    def __init__(self, space: GrushinSpace):
        self.space = space

    def value(self, z, t) -> np.ndarray:
        raise NotImplementedError

    def x_gradient(self, z, t) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} carries no analytic gradient")

    def x_hessian(self, z, t) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} carries no analytic hessian")

    def __add__(self, other):
        return FieldSum(self, _lift(self.space, other))

    __radd__ = __add__

    def __mul__(self, other):
        return FieldProduct(self, _lift(self.space, other))

    __rmul__ = __mul__

    def __neg__(self):
        return Const(self.space, -1.0) * self

    def __sub__(self, other):
        return self + (-_lift(self.space, other))


def _lift(space, x):
    if isinstance(x, ScalarField):
        return x
    return Const(space, float(x))


class Const(ScalarField):
    grad_available = True
    hess_available = True

    def __init__(self, space, c: float):
        super().__init__(space)
        self.c = float(c)

    def value(self, z, t):
        return np.full(np.asarray(z).shape[:-1] or (1,), self.c)

    def x_gradient(self, z, t):
        return np.zeros(np.asarray(z).shape[:-1] + (self.space.N,))

    def x_hessian(self, z, t):
        N = self.space.N
        return np.zeros(np.asarray(z).shape[:-1] + (N, N))


class FieldSum(ScalarField):
    def __init__(self, a: ScalarField, b: ScalarField):
        super().__init__(a.space)
        self.a, self.b = a, b
        self.grad_available = a.grad_available and b.grad_available
        self.hess_available = a.hess_available and b.hess_available

    def value(self, z, t):
        return self.a.value(z, t) + self.b.value(z, t)

    def x_gradient(self, z, t):
        return self.a.x_gradient(z, t) + self.b.x_gradient(z, t)

    def x_hessian(self, z, t):
        return self.a.x_hessian(z, t) + self.b.x_hessian(z, t)


class FieldProduct(ScalarField):
    def __init__(self, a: ScalarField, b: ScalarField):
        super().__init__(a.space)
        self.a, self.b = a, b
        self.grad_available = a.grad_available and b.grad_available
        self.hess_available = a.hess_available and b.hess_available

    def value(self, z, t):
        return self.a.value(z, t) * self.b.value(z, t)

    def x_gradient(self, z, t):
        fa, fb = self.a.value(z, t), self.b.value(z, t)
        return fa[..., None] * self.b.x_gradient(z, t) + fb[..., None] * self.a.x_gradient(z, t)

    def x_hessian(self, z, t):
        fa, fb = self.a.value(z, t), self.b.value(z, t)
        ga, gb = self.a.x_gradient(z, t), self.b.x_gradient(z, t)
        ha, hb = self.a.x_hessian(z, t), self.b.x_hessian(z, t)
        cross = ga[..., :, None] * gb[..., None, :]
        return fa[..., None, None] * hb + fb[..., None, None] * ha + cross + np.swapaxes(cross, -1, -2)


class RadialField(ScalarField):
    """phi(rho) with jets from the closed-form gauge ladder; needs z != 0."""

    grad_available = True
    hess_available = True

    def __init__(self, space, profile: Profile):
        super().__init__(space)
        self.profile = profile

    def value(self, z, t):
        from .geometry import gauge

        return np.asarray(self.profile.f(gauge(self.space, z, t)))

    def _jets(self, z, t):
        return gauge_jets(self.space, z, t, order=2)

    def x_gradient(self, z, t):
        j = self._jets(z, t)
        return np.asarray(self.profile.d1(j.rho))[..., None] * j.grad

    def x_hessian(self, z, t):
        j = self._jets(z, t)
        d1 = np.asarray(self.profile.d1(j.rho))
        d2 = np.asarray(self.profile.d2(j.rho))
        outer = j.grad[..., :, None] * j.grad[..., None, :]
        return d2[..., None, None] * outer + d1[..., None, None] * j.hess


class ZRadialField(ScalarField):
    """phi(|z|); hessian lives in the z-z block only."""

    grad_available = True
    hess_available = True

    def __init__(self, space, profile: Profile):
        super().__init__(space)
        self.profile = profile

    def value(self, z, t):
        z, t = self.space.check_arrays(z, t)
        return np.asarray(self.profile.f(np.sqrt(np.sum(z * z, axis=-1))))

    def x_gradient(self, z, t):
        z, t = self.space.check_arrays(z, t)
        r = np.sqrt(np.sum(z * z, axis=-1))
        g = np.zeros(z.shape[:-1] + (self.space.N,))
        g[..., : self.space.m] = (np.asarray(self.profile.d1(r)) / r)[..., None] * z
        return g

    def x_hessian(self, z, t):
        z, t = self.space.check_arrays(z, t)
        m, N = self.space.m, self.space.N
        r = np.sqrt(np.sum(z * z, axis=-1))
        d1 = np.asarray(self.profile.d1(r))
        d2 = np.asarray(self.profile.d2(r))
        h = np.zeros(z.shape[:-1] + (N, N))
        zz = z[..., :, None] * z[..., None, :]
        h[..., :m, :m] = (d2 - d1 / r)[..., None, None] * zz / (r * r)[..., None, None] + (
            d1 / r
        )[..., None, None] * np.eye(m)
        return h


class FuncOfZ(ScalarField):
    """phi(z_i) for one z-coordinate."""

    grad_available = True
    hess_available = True

    def __init__(self, space, i: int, profile: Profile):
        super().__init__(space)
        if not 0 <= i < space.m:
            raise IndexError(f"z index {i} out of range")
        self.i = i
        self.profile = profile

    def value(self, z, t):
        z, t = self.space.check_arrays(z, t)
        return np.asarray(self.profile.f(z[..., self.i]))

    def x_gradient(self, z, t):
        z, t = self.space.check_arrays(z, t)
        g = np.zeros(z.shape[:-1] + (self.space.N,))
        g[..., self.i] = self.profile.d1(z[..., self.i])
        return g

    def x_hessian(self, z, t):
        z, t = self.space.check_arrays(z, t)
        N = self.space.N
        h = np.zeros(z.shape[:-1] + (N, N))
        h[..., self.i, self.i] = self.profile.d2(z[..., self.i])
        return h


class FuncOfT(ScalarField):
    """phi(t_j); the |z|^gamma factor of the t-fields shows up in the jets."""

    grad_available = True
    hess_available = True

    def __init__(self, space, j: int, profile: Profile):
        super().__init__(space)
        if not 0 <= j < space.k:
            raise IndexError(f"t index {j} out of range")
        self.j = j
        self.profile = profile

    def value(self, z, t):
        z, t = self.space.check_arrays(z, t)
        return np.asarray(self.profile.f(t[..., self.j]))

    def x_gradient(self, z, t):
        z, t = self.space.check_arrays(z, t)
        g = np.zeros(z.shape[:-1] + (self.space.N,))
        az = np.sum(z * z, axis=-1) ** (self.space.gamma / 2.0)
        g[..., self.space.m + self.j] = az * np.asarray(self.profile.d1(t[..., self.j]))
        return g

    def x_hessian(self, z, t):
        # X_b phi = |z|^gamma phi'(t_j) for b = m+j only; outer derivatives:
        # X_i picks up gamma |z|^{gamma-2} z_i phi', X_{m+s} gives |z|^{2 gamma} phi'' delta_{sj}
        z, t = self.space.check_arrays(z, t)
        sp = self.space
        N, mj = sp.N, sp.m + self.j
        r2 = np.sum(z * z, axis=-1)
        d1 = np.asarray(self.profile.d1(t[..., self.j]))
        h = np.zeros(z.shape[:-1] + (N, N))
        h[..., : sp.m, mj] = sp.gamma * r2[..., None] ** (sp.gamma / 2.0 - 1.0) * z * d1[..., None]
        h[..., mj, mj] = r2 ** sp.gamma * np.asarray(self.profile.d2(t[..., self.j]))
        return h


def psi_field(space: GrushinSpace) -> ScalarField:
    """The angle function as a composite field with full jets."""
    g = space.gamma
    return FieldProduct(ZRadialField(space, Profile.power(2.0 * g)), RadialField(space, Profile.power(-2.0 * g)))


def x_apply(space: GrushinSpace, i: int, field: ScalarField, z, t):
    """X_i applied to a field; analytic gradient when present, FD oracle otherwise."""
    if not 0 <= i < space.N:
        raise IndexError(f"field index {i} out of range for N = {space.N}")
    if field.grad_available:
        return field.x_gradient(z, t)[..., i]
    val, _ = x_fd(space, lambda zz, tt: field.value(zz, tt), z, t, (i,))
    return val


def z_frame_coefficients(space: GrushinSpace, z, t) -> np.ndarray:
    """Coefficients of Z in the X-frame: Z = sum_l zeta_l X_l; needs z != 0."""
    z, t = space.check_arrays(z, t)
    az = np.sum(z * z, axis=-1) ** (space.gamma / 2.0)
    out = np.empty(z.shape[:-1] + (space.N,))
    out[..., : space.m] = z
    if space.k:
        out[..., space.m:] = (space.gamma + 1.0) / az[..., None] * t
    return out


def z_apply(space: GrushinSpace, field: ScalarField, z, t):
    """Z f via the X-frame contraction (requires analytic gradient and z != 0)."""
    return np.sum(z_frame_coefficients(space, z, t) * field.x_gradient(z, t), axis=-1)


def validate_jets(space: GrushinSpace, field: ScalarField, z, t, rtol: float = 1e-5) -> dict:
    """Check a field's analytic jets against the FD oracle at sample points.

    Returns the worst absolute defects; raises if they exceed rtol relative
    to the observed jet scale.  This is the enforcement hook for fields
    constructed with hand-written derivatives.
    """
    z, t = space.check_arrays(z, t)
    if z.ndim == 1:
        z, t = z[None, :], t[None, :]
    fn = lambda zz, tt: field.value(zz, tt)
    worst = {"grad": 0.0, "hess": 0.0}
    if field.grad_available:
        g = field.x_gradient(z, t)
        scale = max(1e-12, float(np.max(np.abs(g))))
        for i in range(space.N):
            fd, est = x_fd(space, fn, z, t, (i,))
            worst["grad"] = max(worst["grad"], float(np.max(np.abs(fd - g[:, i]) - est)))
        if worst["grad"] > rtol * scale:
            raise ValueError(f"analytic gradient disagrees with FD oracle by {worst['grad']:.3e}")
    if field.hess_available:
        h = field.x_hessian(z, t)
        scale = max(1e-12, float(np.max(np.abs(h))))
        for a in range(space.N):
            for b in range(space.N):
                fd, est = x_fd(space, fn, z, t, (a, b))
                worst["hess"] = max(worst["hess"], float(np.max(np.abs(fd - h[:, a, b]) - est)))
        if worst["hess"] > rtol * scale:
            raise ValueError(f"analytic hessian disagrees with FD oracle by {worst['hess']:.3e}")
    return worst
