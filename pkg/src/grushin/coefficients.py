"""Variable coefficient matrices and the structural-bound machinery.

The operator under study is sum_ij X_i(a_ij X_j .) with A = [a_ij]
symmetric, uniformly elliptic (spectrum in [lam, 1/lam]), equal to the
identity at the origin, and with B = A - I small near the origin in the
gauge-adapted sense: writing A in (m + k) block form, the structural
hypothesis asks for a constant Lam with, on the unit gauge ball,

    |b_ij| <= Lam rho                       (both indices in the z block)
    |b_ij| <= Lam psi^{1/2 + 1/(2 gamma)} rho = Lam |z|^{gamma+1}/rho^gamma   (otherwise)

    |X_l b_ij| <= Lam                       (l, i, j all in the z block)
    |X_l b_ij| <= Lam psi^{1 + 1/(2 gamma)} (l in t block and max(i,j) in t block)
    |X_l b_ij| <= Lam psi^{1/2}             (otherwise)

Derived pointwise quantities:

    mu    = <A X rho, X rho>      (lam psi <= mu <= psi / lam)
    sigma = <B X rho, X rho>
    F     = (rho/mu) sum_ij a_ij X_i rho X_j     with F rho = rho exactly,
            collapsing to the dilation generator Z when A = I.

`hypothesis_check` measures the minimal admissible Lam on a sample cloud;
`structural_bound_suite` measures the sup-ratio of each first/second-order
consequence bound (the thirteen operator estimates plus the remark/lemma
contractions), whose finiteness and refinement-stability is the falsifiable
content of "there exists a universal constant C".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField, z_frame_coefficients
from .geometry import GrushinSpace, gauge, sample_annulus
from .jets import GaugeJets, gauge_jets
from .oracle import x_fd

__all__ = [
    "CoefficientField",
    "IdentityCoefficients",
    "BlockFamily",
    "ViolatingFamily",
    "DerivedQuantities",
    "derived_at",
    "F_apply",
    "mu_x_gradient",
    "sigma_x_gradient",
    "hypothesis_check",
    "structural_bound_suite",
]


class EllipticityError(ValueError):
    """Sampled eigenvalues leave the declared [lam, 1/lam] band."""


class CoefficientField:
    """Base class: symmetric matrix A(z, t) with X-derivatives of its entries.

    Subclasses provide `matrix` and, when they can, analytic `x_derivative`;
    the default falls back to the FD oracle entrywise.
    """

    def __init__(self, space: GrushinSpace, lam: float = 1.0, structural: float = 0.0):
        self.space = space
        self.lam = float(lam)
        self.structural = float(structural)

    def matrix(self, z, t) -> np.ndarray:
        """A at a batch of points, shape (n, N, N)."""
        raise NotImplementedError

    def x_derivative(self, l: int, z, t) -> np.ndarray:
        """X_l applied entrywise to A (equals X_l B), shape (n, N, N)."""
        sp = self.space
        z, t = sp.check_arrays(z, t)
        if z.ndim == 1:
            z, t = z[None, :], t[None, :]
        out = np.empty((z.shape[0], sp.N, sp.N))
        for i in range(sp.N):
            for j in range(i, sp.N):
                v, _ = x_fd(sp, lambda zz, tt, i=i, j=j: self.matrix(zz, tt)[:, i, j], z, t, (l,))
                out[:, i, j] = v
                out[:, j, i] = v
        return out

    def validate(self, z, t, tol: float = 1e-9):
        """Symmetry and ellipticity spot check; raises on violation."""
        A = self.matrix(z, t)
        if np.max(np.abs(A - np.swapaxes(A, -1, -2))) > tol:
            raise ValueError("coefficient matrix is not symmetric")
        w = np.linalg.eigvalsh(A)
        if np.min(w) < self.lam - tol or np.max(w) > 1.0 / self.lam + tol:
            raise EllipticityError(
                f"eigenvalues in [{np.min(w):.6g}, {np.max(w):.6g}] leave [{self.lam}, {1.0 / self.lam}]"
            )


class IdentityCoefficients(CoefficientField):
    """A = I: the constant-coefficient model operator."""

    def __init__(self, space: GrushinSpace):
        super().__init__(space, lam=1.0, structural=0.0)

    def matrix(self, z, t):
        z, t = self.space.check_arrays(z, t)
        if z.ndim == 1:
            z = z[None, :]
        return np.broadcast_to(np.eye(self.space.N), (z.shape[0], self.space.N, self.space.N)).copy()

    def x_derivative(self, l, z, t):
        z, t = self.space.check_arrays(z, t)
        if z.ndim == 1:
            z = z[None, :]
        return np.zeros((z.shape[0], self.space.N, self.space.N))


class BlockFamily(CoefficientField):
    """The block perturbation A = I + [rho f, |z|^{gamma+1} g; ..., |z|^{gamma+1} h].

    f, g, h are constants here; the z-z block gets rho f on its diagonal, the
    off-diagonal blocks |z|^{gamma+1} g / sqrt(m k) in every entry, and the
    t-t block |z|^{gamma+1} h on its diagonal.  Satisfies the structural
    hypothesis on B_1 with Lam of the order (gamma+1) max(|f|, |g|, |h|).
    """

    def __init__(self, space: GrushinSpace, f: float = 0.1, g: float = 0.1, h: float = 0.1, lam: float | None = None, structural: float | None = None):
        self.f, self.g, self.h = float(f), float(g), float(h)
        mx = max(abs(self.f), abs(self.g), abs(self.h))
        if lam is None:
            # crude but safe band on B_1: perturbation of I by at most ~2 mx
            lam = max(1e-3, 1.0 - 2.5 * mx)
        if structural is None:
            structural = (space.gamma + 2.0) * mx + 1e-12
        super().__init__(space, lam=lam, structural=structural)

    def _blocks(self, z, t):
        sp = self.space
        z, t = sp.check_arrays(z, t)
        if z.ndim == 1:
            z, t = z[None, :], t[None, :]
        rho = gauge(sp, z, t)
        azp = np.sum(z * z, axis=-1) ** ((sp.gamma + 1.0) / 2.0)
        return z, t, rho, azp

    def matrix(self, z, t):
        sp = self.space
        z, t, rho, azp = self._blocks(z, t)
        n, m, k, N = z.shape[0], sp.m, sp.k, sp.N
        A = np.zeros((n, N, N))
        A[:] = np.eye(N)
        A[:, :m, :m] += (rho * self.f)[:, None, None] * np.eye(m)
        if k:
            off = (azp * self.g / np.sqrt(m * k))[:, None, None] * np.ones((m, k))
            A[:, :m, m:] += off
            A[:, m:, :m] += np.swapaxes(off, 1, 2)
            A[:, m:, m:] += (azp * self.h)[:, None, None] * np.eye(k)
        return A

    def x_derivative(self, l, z, t):
        sp = self.space
        z, t, rho, azp = self._blocks(z, t)
        n, m, k, N = z.shape[0], sp.m, sp.k, sp.N
        jets = gauge_jets(sp, z, t, order=2)
        dA = np.zeros((n, N, N))
        dA[:, :m, :m] = (self.f * jets.grad[:, l])[:, None, None] * np.eye(m)
        if k:
            if l < m:
                # X_l |z|^{gamma+1} = (gamma+1) |z|^{gamma-1} z_l; zero for t-fields
                dzp = (sp.gamma + 1.0) * np.sum(z * z, axis=-1) ** ((sp.gamma - 1.0) / 2.0) * z[:, l]
            else:
                dzp = np.zeros(n)
            doff = (dzp * self.g / np.sqrt(m * k))[:, None, None] * np.ones((m, k))
            dA[:, :m, m:] = doff
            dA[:, m:, :m] = np.swapaxes(doff, 1, 2)
            dA[:, m:, m:] = (dzp * self.h)[:, None, None] * np.eye(k)
        return dA


class ViolatingFamily(CoefficientField):
    """b_11 = rho^p with p < 1: breaks the |b| <= Lam rho bound as rho -> 0."""

    def __init__(self, space: GrushinSpace, p: float = 0.5, structural: float = 1.0):
        super().__init__(space, lam=0.3, structural=structural)
        self.p = float(p)

    def matrix(self, z, t):
        sp = self.space
        z, t = sp.check_arrays(z, t)
        if z.ndim == 1:
            z, t = z[None, :], t[None, :]
        rho = gauge(sp, z, t)
        A = np.zeros((z.shape[0], sp.N, sp.N))
        A[:] = np.eye(sp.N)
        A[:, 0, 0] += rho ** self.p
        return A

    def x_derivative(self, l, z, t):
        sp = self.space
        z, t = sp.check_arrays(z, t)
        if z.ndim == 1:
            z, t = z[None, :], t[None, :]
        jets = gauge_jets(sp, z, t, order=2)
        dA = np.zeros((z.shape[0], sp.N, sp.N))
        dA[:, 0, 0] = self.p * jets.rho ** (self.p - 1.0) * jets.grad[:, l]
        return dA


@dataclass
class DerivedQuantities:
    """mu, sigma and the frame coefficients of F at a batch of points."""

    rho: np.ndarray
    psi: np.ndarray
    grad: np.ndarray      # X rho, (n, N)
    A: np.ndarray         # (n, N, N)
    mu: np.ndarray
    sigma: np.ndarray
    F: np.ndarray         # (n, N): F = sum_j F_j X_j
    jets: GaugeJets = field(repr=False, default=None)


def derived_at(coeff: CoefficientField, space: GrushinSpace, z, t, jets: GaugeJets | None = None) -> DerivedQuantities:
    """Assemble mu = <A X rho, X rho>, sigma = mu - psi, and F; needs z != 0."""
    if jets is None:
        jets = gauge_jets(space, z, t, order=2)
    A = coeff.matrix(z, t)
    Ag = np.einsum("nij,ni->nj", A, jets.grad)
    mu = np.einsum("nj,nj->n", Ag, jets.grad)
    lo = coeff.lam * jets.psi
    hi = jets.psi / coeff.lam
    if np.any(mu < lo - 1e-9) or np.any(mu > hi + 1e-9):
        raise EllipticityError("mu leaves the [lam psi, psi/lam] band at a sample point")
    F = (jets.rho / mu)[:, None] * Ag
    return DerivedQuantities(
        rho=jets.rho, psi=jets.psi, grad=jets.grad, A=A, mu=mu, sigma=mu - jets.psi, F=F, jets=jets
    )


def F_apply(coeff: CoefficientField, space: GrushinSpace, f: ScalarField, z, t, dq: DerivedQuantities | None = None) -> np.ndarray:
    """F f = (rho/mu) sum_ij a_ij X_i rho X_j f at a batch of points."""
    if dq is None:
        dq = derived_at(coeff, space, z, t)
    return np.sum(dq.F * f.x_gradient(z, t), axis=-1)


def mu_x_gradient(coeff: CoefficientField, space: GrushinSpace, z, t, dq: DerivedQuantities) -> np.ndarray:
    """Analytic X-gradient of mu: (X_l a_ij) X_i rho X_j rho + 2 a_ij X_j rho X_l X_i rho."""
    n, N = dq.grad.shape
    out = np.empty((n, N))
    Ag = np.einsum("nij,nj->ni", dq.A, dq.grad)
    for l in range(N):
        dA = coeff.x_derivative(l, z, t)
        out[:, l] = np.einsum("nij,ni,nj->n", dA, dq.grad, dq.grad) + 2.0 * np.einsum(
            "ni,ni->n", Ag, dq.jets.hess[:, l, :]
        )
    return out


def sigma_x_gradient(coeff: CoefficientField, space: GrushinSpace, z, t, dq: DerivedQuantities) -> np.ndarray:
    """Analytic X-gradient of sigma = <B X rho, X rho>."""
    n, N = dq.grad.shape
    B = dq.A - np.eye(N)
    Bg = np.einsum("nij,nj->ni", B, dq.grad)
    out = np.empty((n, N))
    for l in range(N):
        dA = coeff.x_derivative(l, z, t)
        out[:, l] = np.einsum("nij,ni,nj->n", dA, dq.grad, dq.grad) + 2.0 * np.einsum(
            "ni,ni->n", Bg, dq.jets.hess[:, l, :]
        )
    return out


def _ratio_sup(num, den, floor=1e-14):
    """sup of num/den over samples, ignoring points where both are negligible."""
    den = np.asarray(den)
    good = den > floor
    if not np.any(good):
        return 0.0
    return float(np.max(np.asarray(num)[good] / den[good]))


def hypothesis_check(coeff: CoefficientField, space: GrushinSpace, n_samples: int = 4000, seed: int = 0, rho_range=(0.01, 1.0)):
    """Measure the minimal structural constant on a stratified cloud in B_1.

    Returns a dict of per-bound worst ratios, the implied minimal Lam, and
    whether it is covered by the declared constant.  Report-only: violating
    families yield a failed verdict, not an exception.
    """
    g = space.gamma
    m = space.m
    z, t = sample_annulus(space, n_samples, rho_range=rho_range, psi_range=(1e-5, 1.0), seed=seed, min_abs_z=1e-4)
    jets = gauge_jets(space, z, t, order=2)
    B = coeff.matrix(z, t) - np.eye(space.N)
    rho, psi = jets.rho, jets.psi

    zi = np.arange(space.N) < m
    zz_block = np.logical_and.outer(zi, zi)

    ratios = {}
    ratios["b-upper-left-over-rho"] = _ratio_sup(np.max(np.abs(B[:, zz_block]), axis=-1), rho)
    if space.k:
        off = ~zz_block
        ratios["b-off-over-weighted-rho"] = _ratio_sup(
            np.max(np.abs(B[:, off]), axis=-1), psi ** (0.5 + 1.0 / (2.0 * g)) * rho
        )
    dzz = np.zeros(z.shape[0])
    dtt = np.zeros(z.shape[0])
    doth = np.zeros(z.shape[0])
    for l in range(space.N):
        dB = np.abs(coeff.x_derivative(l, z, t))
        if l < m:
            dzz = np.maximum(dzz, np.max(dB[:, zz_block], axis=-1))
            if space.k:
                doth = np.maximum(doth, np.max(dB[:, ~zz_block], axis=-1))
        else:
            tt_or_mixed = ~zz_block
            dtt = np.maximum(dtt, np.max(dB[:, tt_or_mixed], axis=-1))
            doth = np.maximum(doth, np.max(dB[:, zz_block], axis=-1))
    ratios["db-zblock"] = float(np.max(dzz))
    if space.k:
        ratios["db-tblock-over-psi-power"] = _ratio_sup(dtt, psi ** (1.0 + 1.0 / (2.0 * g)))
        ratios["db-mixed-over-sqrt-psi"] = _ratio_sup(doth, np.sqrt(psi))
    minimal = max(ratios.values())
    return {
        "ratios": ratios,
        "minimal_structural": minimal,
        "declared_structural": coeff.structural,
        "passed": bool(minimal <= coeff.structural * (1.0 + 1e-9)),
    }


def _default_probe_fields(space: GrushinSpace):
    """Five fixed smooth fields with analytic jets for the commutator checks."""
    from .fields import Const, FuncOfT, FuncOfZ, Profile, RadialField

    probes = [
        RadialField(space, Profile.power(2.0)),
        RadialField(space, Profile.gaussian(1.0)),
        FuncOfZ(space, 0, Profile(f=np.sin, d1=np.cos, d2=lambda r: -np.sin(r))),
        RadialField(space, Profile.poly_bump(0.05, 1.2)),
    ]
    if space.k:
        probes.append(FuncOfT(space, 0, Profile(f=np.cos, d1=lambda r: -np.sin(r), d2=lambda r: -np.cos(r))))
    else:
        probes.append(FuncOfZ(space, 0, Profile.power(3.0)))
    return probes


def div_F(coeff: CoefficientField, space: GrushinSpace, z, t) -> np.ndarray:
    """div F = sum_j X_j(F_j) by finite differences (div X_j = 0 in this frame)."""
    z, t = space.check_arrays(z, t)
    if z.ndim == 1:
        z, t = z[None, :], t[None, :]
    out = np.zeros(z.shape[0])
    for j in range(space.N):
        def comp(zz, tt, j=j):
            return derived_at(coeff, space, zz, tt).F[:, j]

        v, _ = x_fd(space, comp, z, t, (j,))
        out += v
    return out


def structural_bound_suite(
    coeff: CoefficientField,
    space: GrushinSpace,
    n_samples: int = 10000,
    seed: int = 0,
    rho_range=(0.01, 1.0),
    probes=None,
):
    """Sup-ratio measurements for the first/second-order consequence bounds.

    Thirteen operator estimates plus the gradient-contraction remark, the
    off-row contraction lemma, and the third-derivative lemma
    |F(b_ij X_i X_j rho)| <= C psi.  Each entry reports
    sup over the cloud of LHS / majorant, on the full cloud and on its
    leading half (the Halton cloud is nested, so the half-cloud is itself a
    valid sample); stability of the sup under this doubling is the pass
    criterion applied downstream.
    """
    g = space.gamma
    m, k, N = space.m, space.k, space.N
    z, t = sample_annulus(space, n_samples, rho_range=rho_range, psi_range=(1e-4, 1.0), seed=seed, min_abs_z=1e-3)
    jets = gauge_jets(space, z, t, order=3)
    dq = derived_at(coeff, space, z, t, jets=jets)
    rho, psi, mu = dq.rho, dq.psi, dq.mu
    B = dq.A - np.eye(N)
    az = np.sqrt(np.sum(z * z, axis=-1))
    half = n_samples // 2

    dA = [coeff.x_derivative(l, z, t) for l in range(N)]

    per_point = {}

    # (i) |Q - div F| / rho
    per_point["divF-minus-Q-over-rho"] = np.abs(space.Q - div_F(coeff, space, z, t)) / rho

    # (ii) |F mu| and |F psi| over rho psi
    dmu = mu_x_gradient(coeff, space, z, t, dq)
    per_point["F-mu-over-rho-psi"] = np.abs(np.sum(dq.F * dmu, axis=-1)) / (rho * psi)
    per_point["F-psi-over-rho-psi"] = np.abs(np.sum(dq.F * jets.psi_grad, axis=-1)) / (rho * psi)

    # (iii) div(sigma Z / mu) / rho  (one-sided in the source bound; measured two-sided)
    sig_over_mu = dq.sigma / mu

    def sig_mu_fn(zz, tt):
        d = derived_at(coeff, space, zz, tt)
        return d.sigma / d.mu

    zeta = z_frame_coefficients(space, z, t)
    grad_sig_mu = np.stack([x_fd(space, sig_mu_fn, z, t, (l,))[0] for l in range(N)], axis=-1)
    div_sigZ = space.Q * sig_over_mu + np.sum(zeta * grad_sig_mu, axis=-1)
    per_point["div-sigmaZ-over-rho"] = np.abs(div_sigZ) / rho

    # (iv) exact gradient bounds (constant-free)
    per_point["Xrho-zblock-over-psi-power"] = np.max(np.abs(jets.grad[:, :m]), axis=-1) / psi ** (
        1.0 + 1.0 / (2.0 * g)
    )
    if k:
        per_point["Xrho-tblock-over-sqrt-psi"] = np.max(np.abs(jets.grad[:, m:]), axis=-1) / (
            (g + 1.0) * np.sqrt(psi)
        )

    # (v) |F - Z| / rho^2 in the X-frame
    per_point["F-minus-Z-over-rho2"] = np.linalg.norm(dq.F - zeta, axis=-1) / rho ** 2

    # (viii)+(xi) sigma bounds
    per_point["sigma-over-weighted-rho"] = np.abs(dq.sigma) / (rho * psi ** (1.5 + 1.0 / (2.0 * g)))
    dsig = sigma_x_gradient(coeff, space, z, t, dq)
    per_point["Xsigma-over-psi32"] = np.linalg.norm(dsig, axis=-1) / psi ** 1.5
    per_point["sigma-over-mu-rho-psi"] = np.abs(sig_over_mu) / (rho * psi)
    Zsig = np.sum(zeta * dsig, axis=-1)
    per_point["Zsigma-over-rho-psi"] = np.abs(Zsig) / (rho * psi)

    # (ix) |(1/mu) sum_j b_ij X_j rho|_i over |z|
    w = np.einsum("nij,nj->ni", B, jets.grad) / mu[:, None]
    per_point["b-row-over-z"] = np.linalg.norm(w, axis=-1) / az

    # (x) psi gradient bounds
    per_point["Xpsi-zblock-z-over-psi"] = np.max(np.abs(jets.psi_grad[:, :m]), axis=-1) * az / (g * psi)
    if k:
        per_point["Xpsi-tblock-rho-over-psi"] = np.max(np.abs(jets.psi_grad[:, m:]), axis=-1) * rho / (g * psi)

    # gradient contraction remark: |X_l b_ij X_i rho| <= C psi, and the two mu-contractions
    contr = np.zeros(z.shape[0])
    for l in range(N):
        contr = np.maximum(contr, np.max(np.abs(np.einsum("nij,ni->nj", dA[l], jets.grad)), axis=-1))
    per_point["db-grad-contraction-over-psi"] = contr / psi
    s1 = np.zeros(z.shape[0])
    for i in range(N):
        s1 += np.abs(sum(dA[i][:, i, j] * jets.grad[:, j] for j in range(N)))
    per_point["div-row-contraction-over-mu"] = s1 / mu
    per_point["b-hess-contraction-over-mu"] = np.abs(np.einsum("nij,nij->n", B, jets.hess)) / mu

    # off-row lemma: |sum_j b_kj X_j rho| <= C rho mu^{1 + 1/(2 gamma)}
    rowsum = np.max(np.abs(np.einsum("nkj,nj->nk", B, jets.grad)), axis=-1)
    per_point["b-row-over-rho-mu-power"] = rowsum / (rho * mu ** (1.0 + 1.0 / (2.0 * g)))

    # third-derivative lemma: |F(b_ij X_i X_j rho)| <= C psi
    s = np.einsum("nij,nij->n", B, jets.hess)
    Xs = np.empty((z.shape[0], N))
    for r in range(N):
        Xs[:, r] = np.einsum("nij,nij->n", dA[r], jets.hess) + np.einsum("nij,nij->n", B, jets.third[:, r])
    per_point["F-b-hess-over-psi"] = np.abs(np.sum(dq.F * Xs, axis=-1)) / psi

    # commutator items (vii), (xii), (xiii) on fixed probe fields
    if probes is None:
        probes = _default_probe_fields(space)
    comm_F = np.zeros(z.shape[0])
    comm_sZ = np.zeros(z.shape[0])
    comm_bRow = np.zeros(z.shape[0])
    FA = np.zeros(z.shape[0])
    wtil = rho[:, None] * w  # (rho/mu) sum_j b_ij X_j rho
    for u in probes:
        gu = u.x_gradient(z, t)
        hu = u.x_hessian(z, t)
        Xu_norm = np.linalg.norm(gu, axis=-1)
        ok = Xu_norm > 1e-8

        Fu_fn = lambda zz, tt: np.sum(derived_at(coeff, space, zz, tt).F * u.x_gradient(zz, tt), axis=-1)
        sZu_fn = lambda zz, tt: (
            lambda d, zf: -d.sigma / d.mu * np.sum(zf * u.x_gradient(zz, tt), axis=-1)
        )(derived_at(coeff, space, zz, tt), z_frame_coefficients(space, zz, tt))
        bRow_fn = lambda zz, tt: (
            lambda d: np.sum(
                (d.rho / d.mu)[:, None]
                * np.einsum("nij,nj->ni", coeff.matrix(zz, tt) - np.eye(N), d.grad)
                * u.x_gradient(zz, tt),
                axis=-1,
            )
        )(derived_at(coeff, space, zz, tt))

        for i in range(N):
            XiFu, _ = x_fd(space, Fu_fn, z, t, (i,))
            FXiu = np.sum(dq.F * hu[:, :, i], axis=-1)
            val = np.abs(XiFu - FXiu - gu[:, i])
            comm_F = np.maximum(comm_F, np.where(ok, val / (rho * np.maximum(Xu_norm, 1e-8)), 0.0))

            XisZ, _ = x_fd(space, sZu_fn, z, t, (i,))
            sZXiu = -sig_over_mu * np.sum(zeta * hu[:, :, i], axis=-1)
            val = np.abs(XisZ - sZXiu)
            comm_sZ = np.maximum(comm_sZ, np.where(ok, val / (rho * np.maximum(Xu_norm, 1e-8)), 0.0))

            XibR, _ = x_fd(space, bRow_fn, z, t, (i,))
            bRXiu = np.sum(wtil * hu[:, :, i], axis=-1)
            val = np.abs(XibR - bRXiu)
            comm_bRow = np.maximum(comm_bRow, np.where(ok, val / (rho * np.maximum(Xu_norm, 1e-8)), 0.0))

        # (vi) |<(FA) Xu, Xu>| <= C rho |Xu|^2
        FA_mat = sum(dq.F[:, l, None, None] * dA[l] for l in range(N))
        val = np.abs(np.einsum("nij,ni,nj->n", FA_mat, gu, gu))
        FA = np.maximum(FA, np.where(ok, val / (rho * np.maximum(Xu_norm, 1e-8) ** 2), 0.0))

    per_point["commutator-F-over-rho-Xu"] = comm_F
    per_point["commutator-sigmaZ-over-rho-Xu"] = comm_sZ
    per_point["commutator-brow-over-rho-Xu"] = comm_bRow
    per_point["FA-quadratic-over-rho-Xu2"] = FA

    out = {}
    for name, vals in per_point.items():
        vals = np.asarray(vals)
        finite = np.isfinite(vals)
        out[name] = {
            "sup": float(np.max(vals[finite])) if np.any(finite) else float("nan"),
            "sup_half": float(np.max(vals[:half][finite[:half]])) if np.any(finite[:half]) else float("nan"),
            "skipped": int(np.sum(~finite)),
        }
    return out
