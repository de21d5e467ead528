"""Pointwise operator application and the Rellich-identity residual.

The operator is L u = sum_ij X_i(a_ij X_j u); with A = I it reduces to the
model operator Delta_z + |z|^{2 gamma} Delta_t, which acts on gauge-radial
functions through

    L f(rho) = psi ( f''(rho) + (Q-1) f'(rho) / rho ),

so rho^{2-Q} is annihilated away from the pole and rho^2 maps to 2 Q psi.

For a vector field G and u compactly supported in the annulus, integration
by parts gives the interior Rellich combination (div X_i = 0 for every
field in this frame, so that term drops):

    -2 I[ a_ij X_i u [X_j, G] u ] + I[ div G <A Xu, Xu> ]
    + I[ <(GA) Xu, Xu> ] - 2 I[ Gu L u ]  =  0,

where (GA)_ij = G a_ij.  `rellich_residual` evaluates the left side by
quadrature, normalised by the largest term; it converges to zero at the
quadrature order for every admissible (A, u, G).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientField, DerivedQuantities, derived_at, div_F
from .fields import ScalarField
from .geometry import GrushinSpace, gauge
from .jets import gauge_jets
from .oracle import x_fd
from .quadrature import AnnulusDomain, QuadratureGrid, nodes

__all__ = [
    "DegenerateOperator",
    "RadialWeight",
    "apply_L",
    "radial_apply",
    "rellich_residual",
]


@dataclass
class DegenerateOperator:
    """The divergence-form pair (space, coefficients)."""

    space: GrushinSpace
    coeff: CoefficientField

    def __post_init__(self):
        if getattr(self.coeff, "space", None) is not None and self.coeff.space.N != self.space.N:
            raise ValueError("coefficient dimension does not match the space")


def apply_L(op: DegenerateOperator, u: ScalarField, z, t, dA=None) -> np.ndarray:
    """L u = sum_ij [X_i a_ij X_j u + a_ij X_i X_j u] at a batch of points.

    Requires analytic second jets on u; the noncommuting order X_i(X_j u)
    is exactly what u.x_hessian stores.
    """
    sp = op.space
    z, t = sp.check_arrays(z, t)
    if z.ndim == 1:
        z, t = z[None, :], t[None, :]
    if not u.hess_available:
        raise ValueError("apply_L needs a field with analytic second derivatives")
    A = op.coeff.matrix(z, t)
    gu = u.x_gradient(z, t)
    hu = u.x_hessian(z, t)
    out = np.einsum("nij,nij->n", A, hu)
    for i in range(sp.N):
        dAi = dA[i] if dA is not None else op.coeff.x_derivative(i, z, t)
        out += np.einsum("nj,nj->n", dAi[:, i, :], gu)
    return out


def radial_apply(space: GrushinSpace, f1, f2, z, t) -> np.ndarray:
    """psi (f''(rho) + (Q-1) f'(rho)/rho) for a radial profile with derivatives f1, f2."""
    from .geometry import angle

    rho = gauge(space, z, t)
    psi = angle(space, z, t)
    return psi * (np.asarray(f2(rho)) + (space.Q - 1.0) * np.asarray(f1(rho)) / rho)


@dataclass(frozen=True)
class RadialWeight:
    """phi(rho) = rho^a, optionally times (-log rho); the radial factor of G."""

    a: float
    log_factor: bool = False

    def value(self, rho):
        v = rho ** self.a
        if self.log_factor:
            v = v * (-np.log(rho))
        return v

    def derivative(self, rho):
        d = self.a * rho ** (self.a - 1.0)
        if self.log_factor:
            d = d * (-np.log(rho)) - rho ** (self.a - 1.0)
        return d


class SupportLeakageError(ValueError):
    """Test function does not vanish near the integration boundary."""


def rellich_residual(
    op: DegenerateOperator,
    u: ScalarField,
    weight: RadialWeight,
    domain: AnnulusDomain,
    grid: QuadratureGrid,
) -> dict:
    """Normalised interior Rellich residual for G = phi(rho) F.

    Checks that u is negligible near the annulus boundary (the identity
    holds without boundary terms only then), evaluates the four interior
    terms on the quadrature nodes and returns them with
    |sum| / max |term|.  The commutator [X_j, G]u expands as
    phi [X_j, F]u + phi'(rho) X_j rho Fu with [X_j, F]u = X_j(Fu) - F(X_j u),
    the outer derivative by finite differences; div G = phi div F + rho phi'
    reuses the finite-difference divergence of F.
    """
    sp = op.space
    nd = nodes(sp, domain, grid)
    z, t, w = nd.z, nd.t, nd.w

    uv = u.value(z, t)
    rho = gauge(sp, z, t)
    umax = float(np.max(np.abs(uv))) if uv.size else 0.0
    shell = 0.02 * (domain.r_out - domain.r_in)
    near_bd = (rho > domain.r_out - shell) | (rho < domain.r_in + shell)
    if umax > 0 and np.any(near_bd):
        leak = float(np.max(np.abs(uv[near_bd])))
        if leak > 1e-9 * umax:
            raise SupportLeakageError(
                f"|u| reaches {leak:.3e} within the boundary shell (max |u| = {umax:.3e})"
            )

    jets = gauge_jets(sp, z, t, order=2)
    dq = derived_at(op.coeff, sp, z, t, jets=jets)
    dA = [op.coeff.x_derivative(l, z, t) for l in range(sp.N)]

    gu = u.x_gradient(z, t)
    hu = u.x_hessian(z, t)
    Agu = np.einsum("nij,nj->ni", dq.A, gu)
    AXuXu = np.einsum("ni,ni->n", Agu, gu)
    Lu = apply_L(op, u, z, t, dA=dA)
    Fu = np.sum(dq.F * gu, axis=-1)

    phi = weight.value(rho)
    dphi = weight.derivative(rho)
    Gu = phi * Fu

    divF = div_F(op.coeff, sp, z, t)
    divG = phi * divF + rho * dphi

    # [X_j, G]u for every j
    comm = np.empty_like(gu)
    Fu_fn = lambda zz, tt: np.sum(
        derived_at(op.coeff, sp, zz, tt).F * u.x_gradient(zz, tt), axis=-1
    )
    for j in range(sp.N):
        XjFu, _ = x_fd(sp, Fu_fn, z, t, (j,))
        FXju = np.sum(dq.F * hu[:, :, j], axis=-1)
        comm[:, j] = phi * (XjFu - FXju) + dphi * jets.grad[:, j] * Fu

    GA = sum(phi[:, None, None] * dq.F[:, l, None, None] * dA[l] for l in range(sp.N))

    terms = {
        "commutator": -2.0 * float(np.dot(np.einsum("ni,ni->n", Agu, comm), w)),
        "divergence": float(np.dot(divG * AXuXu, w)),
        "coefficient-drift": float(np.dot(np.einsum("nij,ni,nj->n", GA, gu, gu), w)),
        "operator": -2.0 * float(np.dot(Gu * Lu, w)),
    }
    scale = max(abs(v) for v in terms.values())
    total = sum(terms.values())
    return {
        "terms": terms,
        "residual": abs(total),
        "normalized_residual": abs(total) / scale if scale > 0 else 0.0,
        "scale": scale,
        "n_nodes": int(w.size),
    }
