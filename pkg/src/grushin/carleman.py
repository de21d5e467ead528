"""Both sides of the four weighted inequalities, with sweeps and cross-checks.

Cases (all over functions supported in a gauge annulus inside B_R \\ {0}):

    EST1   a^3 I[rho^{-2a-4+e} e^{2a rho^e} u^2 mu]
           + a I[rho^{-2a-2+e} e^{2a rho^e} <A Xu, Xu>]
           <= C I[rho^{-2a} e^{2a rho^e} (L u)^2 / mu]
    DF     same left side, right side built from (L u + V u) with
           |V| + |FV| <= K psi and a >~ sqrt(K)
    F10    adds a^3 I[rho^{-2a-2} e^{2a rho^e} |u|^q mu] on the left;
           right side built from (L u + f(., u) psi)
    HAR1   b^3 I[rho^{-Q} e^{b (log rho)^2} u^2 mu]
           + b I[rho^{-Q+2} e^{b (log rho)^2} <A Xu, Xu>]
           <= C I[rho^{-Q+4} e^{b (log rho)^2} (L u)^2 / mu]

Every weight is e^{-2 log W} rho^p for the substitution factor
W = rho^beta e^{-a rho^e} (with 2 beta = 2a + 4 - Q, so the zero-order
weight collapses to rho^{-Q+e}) or W = e^{-(b/2)(log rho)^2}, with
p in {e-Q, 2+e-Q, 2-Q, 4-Q}.  Integrals are evaluated in units of
e^{max log-weight}, so ratios are exact and no parameter overflows.

The substitution cross-check recomputes the right side through the
expanded product-rule form of L(W v): v-jets are obtained by the chain
rule (in a bounded scaling), combined with the closed-form gauge jets and
the coefficient derivatives.  Agreement with the direct evaluation
validates that algebra without trusting either path alone.  Note the
expansion keeps b_ij (not a_ij) on the X_i X_j rho term next to the
separate psi-bracket; the two bookkeepings differ by the trace term
B_gamma rho and only this one is consistent, as the cross-check confirms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import CoefficientField, derived_at
from .fields import Const, FuncOfT, FuncOfZ, Profile, RadialField, ScalarField, ZRadialField, psi_field
from .geometry import GrushinSpace
from .jets import gauge_jets
from .operators import DegenerateOperator, apply_L
from .quadrature import AnnulusDomain, QuadratureGrid, nodes

__all__ = [
    "CarlemanCase",
    "PotentialSpec",
    "TestMember",
    "standard_suite",
    "evaluate_sides",
    "substitution_check",
    "parameter_sweep",
    "constant_estimate",
]

CASES = ("est1", "df", "f10", "har1")


class SupportViolation(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """Zero-order perturbations: bounded / C1 / Hardy potentials, or a sublinearity.

    bounded:   V = K psi                 (|V| <= K psi)
    c1:        V = K psi                 (|V| + |FV| <= K' psi, K' measured)
    hardy:     V = K psi / rho^2
    sublinear: f((z,t), s) = kappa |s|^{q-2} s with primitive
               G = (kappa/q)|s|^q, so s f = q G exactly and
               (kappa/q) s^q <= G <= (kappa/q) s^p with p = q.
    """

    kind: str
    K: float = 1.0
    q: float = 1.5
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bounded", "c1", "hardy", "sublinear"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "sublinear" and not (1.0 < self.q < 2.0):
            raise ValueError("sublinear exponent must satisfy 1 < q < 2")

    def make_field(self, space: GrushinSpace) -> ScalarField:
        if self.kind == "sublinear":
            raise ValueError("sublinear specs describe f(., u), not a potential field")
        v = Const(space, self.K) * psi_field(space)
        if self.kind == "hardy":
            v = v * RadialField(space, Profile.power(-2.0))
        return v

    def f_of(self, u: np.ndarray) -> np.ndarray:
        return self.kappa * np.sign(u) * np.abs(u) ** (self.q - 1.0)

    def G_of(self, u: np.ndarray) -> np.ndarray:
        return (self.kappa / self.q) * np.abs(u) ** self.q

    def check_sublinear(self, n: int = 200) -> dict:
        """Sample the structural conditions on s in (-1, 1) \\ {0}."""
        s = np.linspace(-1.0, 1.0, n + 1)
        s = s[s != 0.0]
        sf = s * self.f_of(s)
        G = self.G_of(s)
        lo = (self.kappa / self.q) * np.abs(s) ** self.q
        return {
            "positive": bool(np.all(sf > 0.0)),
            "sf_le_qG": bool(np.all(sf <= self.q * G + 1e-12)),
            "bracketed": bool(np.all((G >= lo - 1e-12) & (G <= lo + 1e-12))),
            "f_at_zero": float(self.f_of(np.array([0.0]))[0]),
        }


@dataclass(frozen=True)
class CarlemanCase:
    """One inequality instance: which side pair, weight parameter, support radius."""

    which: str
    parameter: float                  # alpha for est1/df/f10, beta for har1
    epsilon: float = 0.5
    R: float = 0.6
    potential: PotentialSpec | None = None

    def __post_init__(self):
        if self.which not in CASES:
            raise ValueError(f"case must be one of {CASES}")
        if self.parameter <= 0:
            raise ValueError("weight parameter must be positive")
        if self.which != "har1" and not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.which == "har1" and self.R >= 1.0:
            raise ValueError("the log-squared weight case needs R < 1 (log rho < 0 throughout)")
        if self.which == "df" and (self.potential is None or self.potential.kind not in ("bounded", "c1")):
            raise ValueError("df needs a bounded/c1 potential")
        if self.which == "f10" and (self.potential is None or self.potential.kind != "sublinear"):
            raise ValueError("f10 needs a sublinear spec")

    def beta(self, space: GrushinSpace) -> float:
        if self.which == "har1":
            return self.parameter
        return (2.0 * self.parameter + 4.0 - space.Q) / 2.0

    def log_W(self, space, rho):
        """log of the substitution factor W (u = W v)."""
        if self.which == "har1":
            return -(self.parameter / 2.0) * np.log(rho) ** 2
        return self.beta(space) * np.log(rho) - self.parameter * rho ** self.epsilon

    def h1(self, space, rho):
        """(log W)'(rho)."""
        if self.which == "har1":
            return -self.parameter * np.log(rho) / rho
        a, e = self.parameter, self.epsilon
        return self.beta(space) / rho - a * e * rho ** (e - 1.0)

    def h2(self, space, rho):
        """(log W)''(rho)."""
        if self.which == "har1":
            return -self.parameter * (1.0 - np.log(rho)) / rho ** 2
        a, e = self.parameter, self.epsilon
        return -self.beta(space) / rho ** 2 - a * e * (e - 1.0) * rho ** (e - 2.0)

    @property
    def eps0(self) -> float:
        return 0.0 if self.which == "har1" else self.epsilon


@dataclass(frozen=True)
class TestMember:
    name: str
    field: ScalarField
    support: tuple[float, float]
    kind: str


def _angular_factor(space: GrushinSpace, c: float) -> ScalarField:
    """c z_1/|z| mollified by a psi power: c z_1 |z|^{a-1} / rho^a with a-1 >= 3.

    The psi power is chosen so the factor stays C^2 across {z = 0} for the
    gammas in use and the degenerate-direction second derivatives keep
    (L u)^2 / mu integrable.
    """
    s = max(2, math.ceil(2.0 / space.gamma))
    a = 2.0 * space.gamma * s
    return Const(space, c) * FuncOfZ(space, 0, Profile.power(1.0)) * ZRadialField(
        space, Profile.power(a - 1.0)
    ) * RadialField(space, Profile.power(-a))


def _tensor_member(space: GrushinSpace, z_lo, z_hi, t_hi, name) -> TestMember:
    """Product bump phi(z_1) prod chi(t_j), z-support bounded away from {z=0}."""
    f = FuncOfZ(space, 0, Profile.poly_bump(z_lo, z_hi))
    for i in range(1, space.m):
        f = f * FuncOfZ(space, i, Profile.poly_bump(-0.4 * z_hi, 0.4 * z_hi))
    for j in range(space.k):
        f = f * FuncOfT(space, j, Profile.poly_bump(-t_hi, t_hi))
    # exact rho-range of the support box
    g1 = space.gamma + 1.0
    zmin = np.zeros(space.m)
    zmin[0] = z_lo
    zmax = np.full(space.m, 0.4 * z_hi)
    zmax[0] = z_hi
    rho_lo = float(np.sum(zmin ** 2) ** (g1 / 2.0)) ** (1.0 / g1) if space.k == 0 else float(
        (np.sum(zmin ** 2) ** g1) ** (1.0 / (2.0 * g1))
    )
    rho_hi = float(
        ((np.sum(zmax ** 2)) ** g1 + g1 ** 2 * space.k * t_hi ** 2) ** (1.0 / (2.0 * g1))
    )
    return TestMember(name, f, (0.98 * rho_lo, 1.02 * rho_hi), "tensor")


def standard_suite(space: GrushinSpace, R: float = 0.6) -> list[TestMember]:
    """The fixed 20-member family: 10 gauge-radial bumps of varied support and
    sharpness, 5 angular modulations, 5 tensor bumps.  All supports sit in
    B_R \\ {0}; parameters are hard-coded for reproducibility.
    """
    sc = R / 0.6
    members: list[TestMember] = []
    radial_specs = [
        (0.30, 0.55, 3, 3),
        (0.25, 0.50, 3, 3),
        (0.35, 0.60, 3, 3),
        (0.30, 0.60, 4, 4),
        (0.25, 0.45, 3, 4),
        (0.40, 0.60, 3, 3),
        (0.20, 0.50, 4, 3),
        (0.30, 0.50, 5, 5),
        (0.25, 0.60, 3, 5),
        (0.35, 0.55, 4, 4),
    ]
    for idx, (a, b, p, q) in enumerate(radial_specs):
        a, b = a * sc, b * sc
        members.append(
            TestMember(f"radial-{idx}", RadialField(space, Profile.poly_bump(a, b, p, q)), (a, b), "radial")
        )
    angular_specs = [(0.30, 0.55, 0.5), (0.25, 0.50, -0.4), (0.30, 0.60, 0.8), (0.35, 0.55, 0.3), (0.25, 0.55, -0.7)]
    for idx, (a, b, c) in enumerate(angular_specs):
        a, b = a * sc, b * sc
        base = RadialField(space, Profile.poly_bump(a, b))
        members.append(
            TestMember(f"angular-{idx}", base * (Const(space, 1.0) + _angular_factor(space, c)), (a, b), "angular")
        )
    tensor_specs = [(0.28, 0.50, 0.05), (0.22, 0.45, 0.04), (0.30, 0.55, 0.06), (0.25, 0.50, 0.03), (0.33, 0.52, 0.05)]
    for idx, (zl, zh, th) in enumerate(tensor_specs):
        members.append(_tensor_member(space, zl * sc, zh * sc, th * sc ** (space.gamma + 1.0), f"tensor-{idx}"))
    return members


class _MemberData:
    """Node set and parameter-independent arrays for one (operator, member, grid)."""

    def __init__(self, op: DegenerateOperator, member: TestMember, grid: QuadratureGrid):
        sp = op.space
        lo, hi = member.support
        self.domain = AnnulusDomain(lo, hi)
        nd = nodes(sp, self.domain, grid)
        self.w = nd.w
        self.z, self.t = nd.z, nd.t
        jets = gauge_jets(sp, self.z, self.t, order=2)
        dq = derived_at(op.coeff, sp, self.z, self.t, jets=jets)
        self.rho, self.psi, self.mu = dq.rho, dq.psi, dq.mu
        self.jets, self.dq = jets, dq
        self.dA = [op.coeff.x_derivative(l, self.z, self.t) for l in range(sp.N)]
        u = member.field
        self.u = u.value(self.z, self.t)
        self.gu = u.x_gradient(self.z, self.t)
        self.hu = u.x_hessian(self.z, self.t)
        self.Lu = apply_L(op, u, self.z, self.t, dA=self.dA)
        self.AXuXu = np.einsum("nij,ni,nj->n", dq.A, self.gu, self.gu)
        self.Fu = np.sum(dq.F * self.gu, axis=-1)

    def extra_source(self, space, case: CarlemanCase):
        """The V u or f(., u) psi addition to L u on the right side."""
        if case.which == "df":
            V = case.potential.make_field(space)
            return V.value(self.z, self.t) * self.u
        if case.which == "f10":
            return case.potential.f_of(self.u) * self.psi
        return np.zeros_like(self.u)


def _scaled_weights(case: CarlemanCase, space, rho):
    base = -2.0 * case.log_W(space, rho)
    Lstar = float(np.max(base))
    wfac = np.exp(base - Lstar)
    return wfac, Lstar


def _sides(case: CarlemanCase, space, data: _MemberData):
    """All integrals of one evaluation, in units of e^{log_scale}."""
    rho, psi, mu = data.rho, data.psi, data.mu
    wfac, Lstar = _scaled_weights(case, space, rho)
    Q = space.Q
    par = case.parameter
    e0 = case.eps0

    def integral(p, values):
        return float(np.dot(wfac * rho ** p * values, data.w))

    terms = {
        "zero-order": par ** 3 * integral(e0 - Q, data.u ** 2 * mu),
        "gradient": par * integral(2.0 + e0 - Q, data.AXuXu),
    }
    if case.which == "f10":
        # The |u|^q term carries parameter^2: the integration-by-parts bound
        # on the primitive term yields a beta^2 prefactor, and only that
        # weight keeps the constant parameter-uniform (a parameter^3 weight
        # makes the ratio grow like sqrt(parameter) on any polynomial bump).
        terms["sublinear"] = par ** 2 * integral(2.0 - Q, np.abs(data.u) ** case.potential.q * mu)
    S = data.Lu + data.extra_source(space, case)
    rhs = integral(4.0 - Q, S ** 2 / mu)
    for name, v in terms.items():
        if v < -1e-12 * max(abs(rhs), 1.0):
            raise AssertionError(f"left-side term {name} lost positivity: {v}")
    lhs = sum(terms.values())
    return {
        "lhs_terms": terms,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0.0 else 0.0,
        "log_scale": Lstar,
    }


def _check_support(case: CarlemanCase, member: TestMember):
    lo, hi = member.support
    if not (0.0 < lo < hi <= case.R * (1.0 + 1e-9)):
        raise SupportViolation(
            f"member {member.name} supported on [{lo:.3g}, {hi:.3g}] not inside (0, {case.R}]"
        )


def evaluate_sides(
    case: CarlemanCase,
    op: DegenerateOperator,
    member: TestMember,
    grid: QuadratureGrid,
    data: _MemberData | None = None,
    data_fine: _MemberData | None = None,
) -> dict:
    """Evaluate every term of the inequality for one test function.

    Values are reported in units of e^{log_scale} (the scale is the maximal
    log-weight over the nodes); the ratio is scale-free.  The quadrature
    error is the change of the ratio under one grid halving.
    """
    _check_support(case, member)
    sp = op.space
    if float(np.max(np.abs(member.field.value(*_boundary_probe(sp, member))))) > 1e-9:
        raise SupportViolation(f"member {member.name} does not vanish at its support boundary")
    data = data or _MemberData(op, member, grid)
    data_fine = data_fine or _MemberData(op, member, grid.refined())
    coarse = _sides(case, sp, data)
    fine = _sides(case, sp, data_fine)
    out = dict(fine)
    out["member"] = member.name
    out["quad_error"] = abs(fine["ratio"] - coarse["ratio"])
    if case.which == "df":
        V = case.potential.make_field(sp)
        Vv = V.value(data.z, data.t)
        FV = np.sum(data.dq.F * V.x_gradient(data.z, data.t), axis=-1)
        out["effective_K"] = float(np.max((np.abs(Vv) + np.abs(FV)) / data.psi))
    return out


def _boundary_probe(space, member):
    """A few points just outside the support annulus (for the vanishing check)."""
    lo, hi = member.support
    rr = np.array([lo * 0.98, hi * 1.02, lo * 0.90, hi * 1.10])
    ang = np.linspace(0.15, 1.0, rr.size)
    z = np.zeros((rr.size, space.m))
    z[:, 0] = rr * ang
    t = np.zeros((rr.size, space.k))
    if space.k:
        g1 = space.gamma + 1.0
        t[:, 0] = np.sqrt(np.clip(rr ** (2 * g1) - (rr * ang) ** (2 * g1), 0.0, None)) / g1
    return z, t


def expanded_operator_values(case: CarlemanCase, op: DegenerateOperator, data: _MemberData) -> np.ndarray:
    """L u recomputed through the substitution algebra u = W v.

    v-jets come from the chain rule applied to v = (1/W) u in a bounded
    normalisation; the expansion then assembles

        L u = W L v + 2 W' (mu/rho) F v
              + [ psi (W''/W + (Q-1) W'/(W rho))
                  + (X_i b_ij X_j rho + b_ij X_i X_j rho) W'/W
                  + b_ij X_i rho X_j rho (W''/W) ] W v

    with W'/W = h1 and W''/W = h2 + h1^2.  Algebraically identical to
    apply_L, numerically a different path through the gauge jets.
    """
    sp = op.space
    rho = data.rho
    h1 = case.h1(sp, rho)
    h2 = case.h2(sp, rho)
    # bounded normalisation of 1/W
    expo = -case.log_W(sp, rho)
    C = float(np.max(expo))
    g_m = np.exp(expo - C)          # (1/W) e^{-C}
    W_m = np.exp(C - expo)          # W e^{C}
    dg = -h1 * g_m
    d2g = (h1 ** 2 - h2) * g_m

    jets, dq = data.jets, data.dq
    u, gu, hu = data.u, data.gu, data.hu
    gr = jets.grad

    v_m = g_m * u
    gv_m = dg[:, None] * gr * u[:, None] + g_m[:, None] * gu
    outer = gr[:, :, None] * gr[:, None, :]
    cross = gr[:, :, None] * gu[:, None, :]
    hv_m = (
        d2g[:, None, None] * outer * u[:, None, None]
        + dg[:, None, None] * jets.hess * u[:, None, None]
        + dg[:, None, None] * (cross + np.swapaxes(cross, 1, 2))
        + g_m[:, None, None] * hu
    )

    Lv_m = np.einsum("nij,nij->n", dq.A, hv_m)
    for i in range(sp.N):
        Lv_m += np.einsum("nj,nj->n", data.dA[i][:, i, :], gv_m)
    Fv_m = np.sum(dq.F * gv_m, axis=-1)

    B = dq.A - np.eye(sp.N)
    dbXrho = sum(np.einsum("nij,nj->ni", data.dA[i], gr)[:, i] for i in range(sp.N))
    bHrho = np.einsum("nij,nij->n", B, jets.hess)
    bXrhoXrho = np.einsum("nij,ni,nj->n", B, gr, gr)
    w2 = h2 + h1 ** 2
    bracket = (
        data.psi * (w2 + (sp.Q - 1.0) * h1 / rho)
        + (dbXrho + bHrho) * h1
        + bXrhoXrho * w2
    )
    return W_m * (Lv_m + 2.0 * h1 * (dq.mu / rho) * Fv_m + bracket * v_m)


def substitution_check(case: CarlemanCase, op: DegenerateOperator, member: TestMember, grid: QuadratureGrid, data: _MemberData | None = None) -> dict:
    """Direct-u versus expanded-v evaluation of the right side.

    Also rechecks the zero-order left term through the collapsed weight
    rho^{eps-Q} v^2 mu (the exponent collapse 2 beta - 2 alpha - 4 = -Q).
    Returns relative disagreements; both paths share the quadrature nodes,
    so the defect isolates the substitution algebra and float behaviour.
    """
    sp = op.space
    data = data or _MemberData(op, member, grid)
    rho, mu = data.rho, data.mu
    wfac, Lstar = _scaled_weights(case, sp, rho)

    S = data.Lu + data.extra_source(sp, case)
    Lu_exp = expanded_operator_values(case, op, data)
    S_exp = Lu_exp + data.extra_source(sp, case)

    def integral(p, values):
        return float(np.dot(wfac * rho ** p * values, data.w))

    rhs_direct = integral(4.0 - sp.Q, S ** 2 / mu)
    rhs_expanded = integral(4.0 - sp.Q, S_exp ** 2 / mu)

    # zero-order term via the scaled v itself
    expo = 0.5 * (-2.0 * case.log_W(sp, rho) - Lstar) + (2.0 - sp.Q / 2.0) * np.log(rho)
    v_s = np.exp(expo) * data.u
    t0_v = case.parameter ** 3 * float(np.dot(rho ** (case.eps0 - 4.0) * v_s ** 2 * mu, data.w))
    t0_direct = case.parameter ** 3 * integral(case.eps0 - sp.Q, data.u ** 2 * mu)

    pointwise = float(
        np.max(np.abs(Lu_exp - data.Lu)) / max(1e-300, float(np.max(np.abs(data.Lu))))
    )
    return {
        "rhs_direct": rhs_direct,
        "rhs_expanded": rhs_expanded,
        "rhs_rel_disagreement": abs(rhs_expanded - rhs_direct) / max(rhs_direct, 1e-300),
        "zero_order_rel_disagreement": abs(t0_v - t0_direct) / max(t0_direct, 1e-300),
        "operator_pointwise_rel": pointwise,
    }


def parameter_sweep(
    case: CarlemanCase,
    op: DegenerateOperator,
    member: TestMember,
    grid: QuadratureGrid,
    values=(20.0, 40.0, 80.0, 160.0),
) -> dict:
    """ratio(parameter) over a sweep with one shared node set per grid.

    The inequality constant is parameter-independent, so the verdict asks
    the ratio sequence to grow by at most 10% per doubling; the fitted
    log-log slope of rhs/lhs is reported alongside.
    """
    data = _MemberData(op, member, grid)
    data_fine = _MemberData(op, member, grid.refined())
    rows = []
    for val in values:
        c = replace(case, parameter=float(val))
        ev = evaluate_sides(c, op, member, grid, data=data, data_fine=data_fine)
        rows.append({"parameter": float(val), "ratio": ev["ratio"], "quad_error": ev["quad_error"]})
    ratios = np.array([r["ratio"] for r in rows])
    vals = np.asarray(values, dtype=float)
    growth = ratios[1:] / ratios[:-1] if np.all(ratios[:-1] > 0) else np.full(len(ratios) - 1, np.inf)
    slope = float(np.polyfit(np.log(vals), np.log(np.maximum(1.0 / ratios, 1e-300)), 1)[0])
    return {
        "member": member.name,
        "rows": rows,
        "max_growth_per_doubling": float(np.max(growth)) if growth.size else 1.0,
        "rhs_over_lhs_loglog_slope": slope,
        "bounded": bool(np.all(np.isfinite(ratios)) and (growth.size == 0 or np.max(growth) <= 1.10)),
    }


def constant_estimate(
    case: CarlemanCase,
    op: DegenerateOperator,
    suite: list[TestMember],
    grid: QuadratureGrid,
    margin: float = 0.2,
) -> dict:
    """Empirical lower bound for the inequality constant over a suite.

    max of lhs/rhs plus a safety margin; any member failing its evaluation
    aborts with that member named.
    """
    worst = 0.0
    worst_member = None
    per_member = {}
    for member in suite:
        try:
            ev = evaluate_sides(case, op, member, grid)
        except Exception as exc:
            raise RuntimeError(f"suite member {member.name} failed: {exc}") from exc
        per_member[member.name] = ev["ratio"]
        if ev["ratio"] > worst:
            worst, worst_member = ev["ratio"], member.name
    return {
        "constant": worst * (1.0 + margin),
        "max_ratio": worst,
        "argmax_member": worst_member,
        "per_member": per_member,
    }
