"""Suite runners: identities, structural bounds, inequality sweeps, solves.

Each runner turns one verification concern into CheckRecords on a report.
The anchors registered here name the mathematical facts being exercised;
reports refuse records with unregistered anchors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .carleman import (
    CarlemanCase,
    PotentialSpec,
    evaluate_sides,
    parameter_sweep,
    standard_suite,
    substitution_check,
)
from .coefficients import (
    BlockFamily,
    IdentityCoefficients,
    ViolatingFamily,
    derived_at,
    hypothesis_check,
    structural_bound_suite,
)
from .fields import Profile, RadialField, FuncOfT, FuncOfZ, psi_field, z_apply, z_frame_coefficients
from .geometry import GrushinSpace, dilate, gauge, angle, sample_annulus
from .jets import gauge_jets
from .operators import DegenerateOperator, RadialWeight, apply_L, radial_apply, rellich_residual
from .oracle import x_fd
from .quadrature import AnnulusDomain, QuadratureGrid, integrate, WeightedIntegral
from .reporting import CheckRecord, VerificationReport, register_anchor
from .ucp import FDGrid, assemble_operator, fit_exponent_ratio, solve_linear, solve_sublinear, vanishing_order

register_anchor(
    "dilation-homogeneity",
    "angle-range",
    "generator-eigenfunctions",
    "generator-commutator",
    "gradient-contraction",
    "gradient-pairing",
    "radial-field-fixpoint",
    "constant-coefficient-collapse",
    "radial-identity",
    "fundamental-solution",
    "structural-hypothesis",
    "structural-bound-stability",
    "rellich-residual",
    "ball-volume-scaling",
    "profile-exponent",
    "carleman-inequality",
    "carleman-sweep",
    "carleman-substitution",
    "carleman-constant",
    "constant-solution",
    "fundamental-solution-solve",
    "discrete-consistency",
    "vanishing-order-sweep",
    "sublinear-fixpoint",
    "derivative-ladder-oracle",
)


def parallel_map(fn, items, threads: int = 1):
    """Order-preserving map, optionally on a thread pool (deterministic assembly)."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def make_space(cfg) -> GrushinSpace:
    s = cfg["space"]
    return GrushinSpace(s["m"], s["k"], s["gamma"])


def make_coefficients(cfg, space):
    c = cfg.get("coefficients", {"family": "identity"})
    fam = c.get("family", "identity")
    if fam == "identity":
        return IdentityCoefficients(space)
    if fam == "block":
        return BlockFamily(space, c.get("f", 0.1), c.get("g", 0.1), c.get("h", 0.1),
                           structural=c.get("structural"))
    return ViolatingFamily(space, c.get("p", 0.5), structural=c.get("structural", 1.0))


def make_quad_grid(cfg) -> QuadratureGrid:
    q = cfg.get("quadrature", {})
    return QuadratureGrid(
        n_z=q.get("n_z", 64),
        t_axis_factor=q.get("t_axis_factor"),
        subsample=q.get("subsample", 4),
        near_char_refine=q.get("near_char_refine", 2),
        char_threshold=q.get("char_threshold", 0.05),
        inner_refine=q.get("inner_refine", 2),
        inner_band=q.get("inner_band", 0.15),
    )


def _probe_fields(space):
    fields = [
        RadialField(space, Profile.gaussian(0.8)),
        RadialField(space, Profile.poly_bump(0.1, 1.1)),
        FuncOfZ(space, 0, Profile(f=np.sin, d1=np.cos, d2=lambda r: -np.sin(r))),
    ]
    if space.k:
        fields.append(FuncOfT(space, 0, Profile(f=np.cos, d1=lambda r: -np.sin(r), d2=lambda r: -np.cos(r))))
    return fields


def run_identities(cfg, report: VerificationReport, n_points: int = 100):
    """Exact identities at random non-degenerate points, 1e-8 relative."""
    space = make_space(cfg)
    seed = cfg.get("seed", 0)
    tol = 1e-8
    # the structural hypothesis (and the block families' ellipticity bands)
    # live on the unit gauge ball, so the identity cloud stays inside it
    z, t = sample_annulus(space, n_points, rho_range=(0.15, 0.95), psi_range=(1e-3, 1.0),
                          seed=seed, min_abs_z=0.02)
    jets = gauge_jets(space, z, t, order=2)
    rho, psi = jets.rho, jets.psi

    lam_errs = []
    for lam in (0.5, 2.0, 10.0):
        zl, tl = dilate(space, lam, z, t)
        lam_errs.append(float(np.max(np.abs(gauge(space, zl, tl) - lam * rho) / (lam * rho))))
        lam_errs.append(float(np.max(np.abs(angle(space, zl, tl) - psi))))
    report.add(CheckRecord("gauge-angle-homogeneity", "dilation-homogeneity",
                           {"max_error": max(lam_errs)}, 1e-12,
                           "pass" if max(lam_errs) <= 1e-12 else "fail"))

    rng_ok = bool(np.all((psi >= 0.0) & (psi <= 1.0)))
    report.add(CheckRecord("angle-in-unit-interval", "angle-range",
                           {"min": float(psi.min()), "max": float(psi.max())}, None,
                           "pass" if rng_ok else "fail"))

    zeta = z_frame_coefficients(space, z, t)
    Zrho = np.sum(zeta * jets.grad, axis=-1)
    e1 = float(np.max(np.abs(Zrho - rho) / rho))
    Zpsi = np.sum(zeta * jets.psi_grad, axis=-1)
    e2 = float(np.max(np.abs(Zpsi)))
    report.add(CheckRecord("generator-eigenfunctions", "generator-eigenfunctions",
                           {"Zrho_rel": e1, "Zpsi_abs": e2}, tol,
                           "pass" if max(e1, e2) <= tol else "fail"))

    e3 = float(np.max(np.abs(np.sum(jets.grad ** 2, axis=-1) - psi)))
    report.add(CheckRecord("gradient-length-is-angle", "gradient-contraction",
                           {"max_abs": e3}, 1e-12, "pass" if e3 <= 1e-12 else "fail"))

    coeff = make_coefficients(cfg, space)
    dq = derived_at(coeff, space, z, t, jets=jets)
    e4 = float(np.max(np.abs(np.sum(dq.F * jets.grad, axis=-1) - rho) / rho))
    report.add(CheckRecord("radial-field-fixpoint", "radial-field-fixpoint",
                           {"max_rel": e4}, 1e-10, "pass" if e4 <= 1e-10 else "fail"))

    ident = IdentityCoefficients(space)
    dqi = derived_at(ident, space, z, t, jets=jets)
    worst_fz = 0.0
    worst_pair = 0.0
    for f in _probe_fields(space):
        gv = f.x_gradient(z, t)
        Fv = np.sum(dqi.F * gv, axis=-1)
        Zv = z_apply(space, f, z, t)
        scale = 1.0 + np.abs(Zv)
        worst_fz = max(worst_fz, float(np.max(np.abs(Fv - Zv) / scale)))
        pair = np.sum(gv * jets.grad, axis=-1) - (psi / rho) * Zv
        worst_pair = max(worst_pair, float(np.max(np.abs(pair) / (1.0 + np.linalg.norm(gv, axis=-1)))))
    report.add(CheckRecord("identity-coefficient-collapse", "constant-coefficient-collapse",
                           {"max_rel": worst_fz}, tol, "pass" if worst_fz <= tol else "fail"))
    report.add(CheckRecord("gradient-pairing", "gradient-pairing",
                           {"max_rel": worst_pair}, tol, "pass" if worst_pair <= tol else "fail"))

    op = DegenerateOperator(space, ident)
    profiles = {
        "square": Profile.power(2.0),
        "inverse-homogeneous": Profile.power(2.0 - space.Q),
        "gaussian": Profile.gaussian(1.0),
        "bump": Profile.poly_bump(0.1, 2.2),
    }
    worst_rad = 0.0
    for name, pr in profiles.items():
        lv = apply_L(op, RadialField(space, pr), z, t)
        rv = radial_apply(space, pr.d1, pr.d2, z, t)
        worst_rad = max(worst_rad, float(np.max(np.abs(lv - rv) / (1.0 + np.abs(rv)))))
    report.add(CheckRecord("radial-identity", "radial-identity",
                           {"max_rel": worst_rad}, tol, "pass" if worst_rad <= tol else "fail"))

    lv = apply_L(op, RadialField(space, Profile.power(2.0 - space.Q)), z, t)
    e5 = float(np.max(np.abs(lv) * rho ** space.Q))
    report.add(CheckRecord("fundamental-solution-annihilated", "fundamental-solution",
                           {"max_scaled": e5}, tol, "pass" if e5 <= tol else "fail"))

    # [X_i, Z]f = X_i f via the FD oracle on a smooth probe
    f = _probe_fields(space)[0]
    fn = lambda zz, tt: f.value(zz, tt)
    worst_comm = 0.0
    for i in range(space.N):
        Zf_fn = lambda zz, tt: z_apply(space, f, zz, tt)
        XiZf, _ = x_fd(space, Zf_fn, z, t, (i,))
        gv = f.x_gradient(z, t)
        hv = f.x_hessian(z, t)
        ZXif = np.sum(z_frame_coefficients(space, z, t) * hv[:, :, i], axis=-1)
        worst_comm = max(worst_comm, float(np.max(np.abs(XiZf - ZXif - gv[:, i]) / (1.0 + np.abs(gv[:, i])))))
    report.add(CheckRecord("generator-commutator", "generator-commutator",
                           {"max_rel": worst_comm}, 1e-6, "pass" if worst_comm <= 1e-6 else "fail"))
    return report


def run_theorem24(cfg, report: VerificationReport, baselines=None):
    """Structural hypothesis measurement plus the consequence-bound suite."""
    space = make_space(cfg)
    coeff = make_coefficients(cfg, space)
    seed = cfg.get("seed", 0)
    n = cfg.get("samples", {}).get("n", 10000)
    expect_fail = cfg.get("coefficients", {}).get("expect_hypothesis_failure", False)

    hc = hypothesis_check(coeff, space, n_samples=min(n, 4000), seed=seed)
    report.add(CheckRecord(
        "structural-hypothesis", "structural-hypothesis",
        {"minimal_constant": hc["minimal_structural"], "declared": hc["declared_structural"], **hc["ratios"]},
        None, "pass" if hc["passed"] else "fail", expected_failure=expect_fail,
    ))
    if not hc["passed"]:
        # the consequence-bound suite presumes the structural hypothesis
        return report

    res = structural_bound_suite(coeff, space, n_samples=n, seed=seed)
    # the <= 10% stability criterion is defined for the 1e4 -> 2e4 doubling;
    # smaller clouds report growth as a diagnostic only (underpowered sup)
    asserted = n >= 10000
    for name, entry in res.items():
        growth = entry["sup"] / entry["sup_half"] if entry["sup_half"] > 0 else 1.0
        ok = np.isfinite(entry["sup"]) and growth <= 1.10
        verdict = ("pass" if ok else "fail") if asserted else ("pass" if ok else "diagnostic")
        report.add(CheckRecord(
            f"bound-{name}", "structural-bound-stability",
            {"sup": entry["sup"], "sup_half_cloud": entry["sup_half"], "growth": growth},
            1.10, verdict,
        ))
        if baselines is not None:
            cmp = baselines.compare_or_insert(f"theorem24/{name}", entry["sup"], rel_tol=0.25)
            if cmp["status"] == "drift":
                report.add(CheckRecord(f"baseline-{name}", "structural-bound-stability",
                                       cmp, 0.25, "fail"))
    return report


_CARLEMAN_DEFAULT_SWEEP = (20.0, 40.0, 80.0, 160.0)


def build_case(which: str, cfg, space) -> CarlemanCase:
    cc = cfg.get("carleman", {})
    R = cc.get("R", 0.6)
    eps = cc.get("epsilon", 0.5)
    base = cc.get("sweep", list(_CARLEMAN_DEFAULT_SWEEP))[0]
    if which == "df":
        pot = PotentialSpec("c1", K=cc.get("K", 10.0))
    elif which == "f10":
        pot = PotentialSpec("sublinear", q=cc.get("q", 1.5), kappa=cc.get("kappa", 1.0))
    else:
        pot = None
    return CarlemanCase(which, float(base), epsilon=eps, R=R, potential=pot)


def run_carleman(cfg, report: VerificationReport, which: str, baselines=None, threads: int = 1):
    """Sweep one inequality over the standard suite; archive its constant."""
    space = make_space(cfg)
    coeff = make_coefficients(cfg, space)
    op = DegenerateOperator(space, coeff)
    grid = make_quad_grid(cfg)
    case = build_case(which, cfg, space)
    sweep = tuple(cfg.get("carleman", {}).get("sweep", _CARLEMAN_DEFAULT_SWEEP))
    members = standard_suite(space, R=case.R)[: cfg.get("carleman", {}).get("members", 20)]

    def one(member):
        sw = parameter_sweep(case, op, member, grid, values=sweep)
        sub = substitution_check(case, op, member, grid)
        return member.name, sw, sub

    results = parallel_map(one, members, threads)

    max_ratio = 0.0
    max_growth = 0.0
    max_sub = 0.0
    quad_err = 0.0
    table = []
    all_bounded = True
    for name, sw, sub in results:
        for row in sw["rows"]:
            table.append({"member": name, "parameter": row["parameter"],
                          "ratio": row["ratio"], "quad_error": row["quad_error"]})
            max_ratio = max(max_ratio, row["ratio"])
            quad_err = max(quad_err, row["quad_error"] / max(row["ratio"], 1e-300))
        max_growth = max(max_growth, sw["max_growth_per_doubling"])
        all_bounded &= sw["bounded"]
        max_sub = max(max_sub, sub["rhs_rel_disagreement"], sub["zero_order_rel_disagreement"])
    report.add_table(f"carleman_{which}_sweep", table)

    report.add(CheckRecord(
        f"carleman-{which}-sweep", "carleman-sweep",
        {"max_ratio": max_ratio, "max_growth_per_doubling": max_growth, "members": len(members)},
        1.10, "pass" if all_bounded else "fail",
    ))
    sub_tol = 0.01 + quad_err
    report.add(CheckRecord(
        f"carleman-{which}-substitution", "carleman-substitution",
        {"max_rel_disagreement": max_sub}, sub_tol, "pass" if max_sub <= sub_tol else "fail",
    ))
    constant = max_ratio * 1.2
    verdict = "pass"
    values = {"archived_constant": constant, "max_ratio": max_ratio}
    if baselines is not None:
        cmp = baselines.compare_or_insert(f"carleman/{which}/constant", constant, rel_tol=0.10)
        values.update({"baseline_status": cmp["status"], "drift": cmp.get("drift", 0.0)})
        if cmp["status"] == "drift":
            verdict = "fail"
        else:
            # the inequality against the archived constant, for every evaluation
            ref = cmp.get("reference", constant)
            if max_ratio > ref:
                verdict = "fail"
                values["exceeded_reference"] = ref
    report.add(CheckRecord(f"carleman-{which}-constant", "carleman-constant", values, 0.10, verdict))
    return report


def run_ucp(cfg, report: VerificationReport, baselines=None):
    """Exact-solution reproduction, K-sweep vanishing orders, sublinear solve."""
    space = make_space(cfg)
    coeff = make_coefficients(cfg, space)
    op = DegenerateOperator(space, coeff)
    ucfg = cfg.get("ucp", {})
    n_z = ucfg.get("n_z", 64)
    r_out = ucfg.get("r_out", 1.0)
    tol = ucfg.get("tol", 1e-10)
    op_id = DegenerateOperator(space, IdentityCoefficients(space))

    grids = [FDGrid(space, r_out, n_z=n_z), FDGrid(space, r_out, n_z=n_z * 2)]

    worst_const = 0.0
    for g in grids:
        sol = solve_linear(op_id, None, AnnulusDomain(0.0, r_out), 1.0, g, tol=tol)
        worst_const = max(worst_const, float(np.max(np.abs(sol.values - 1.0))))
    report.add(CheckRecord("constant-solution", "constant-solution",
                           {"max_abs_error": worst_const}, 1e-8,
                           "pass" if worst_const <= 1e-8 else "fail"))

    # solution error in the cell-L2 norm: the max norm is dominated by the
    # staircase cells hugging the inner ring and fluctuates preasymptotically
    exact = RadialField(space, Profile.power(2.0 - space.Q))
    errs = []
    for g in grids:
        sol = solve_linear(op_id, None, AnnulusDomain(0.25 * r_out, r_out), exact, g, tol=tol)
        d = (sol.values - exact.value(g.z, g.t))[sol.interior]
        errs.append(float(np.sqrt(np.sum(d ** 2) * g.cellvol)))
    order = float(np.log2(errs[0] / errs[1]))
    report.add(CheckRecord("fundamental-solution-solve", "fundamental-solution-solve",
                           {"coarse_error": errs[0], "fine_error": errs[1], "order": order},
                           1.8, "pass" if order >= 1.8 else "fail"))

    # discrete consistency in the cell-L2 norm away from the characteristic set
    probe = RadialField(space, Profile.gaussian(0.7 * r_out))
    if space.k:
        probe = probe * (1 + 0.3 * FuncOfT(space, 0, Profile(f=np.sin, d1=np.cos, d2=lambda x: -np.sin(x))))
    cerrs = []
    for g in grids:
        L, interior = assemble_operator(op, g, AnnulusDomain(0.0, r_out))
        diff = (L @ probe.value(g.z, g.t)) - apply_L(op, probe, g.z, g.t)
        sel = interior & (np.sqrt(np.sum(g.z ** 2, axis=-1)) > 0.25 * r_out) & (g.rho < 0.85 * r_out)
        cerrs.append(float(np.sqrt(np.sum(diff[sel] ** 2) * g.cellvol)))
    corder = float(np.log2(cerrs[0] / cerrs[1]))
    report.add(CheckRecord("discrete-consistency", "discrete-consistency",
                           {"coarse": cerrs[0], "fine": cerrs[1], "order": corder},
                           1.8, "pass" if corder >= 1.8 else "fail"))

    # K-sweep of vanishing orders under oscillatory boundary data
    Ks = ucfg.get("K_values", [1.0, 10.0, 100.0, 1000.0])
    radii = ucfg.get("radii", [0.5, 0.35, 0.25, 0.18, 0.12])
    grid = FDGrid(space, r_out, n_z=max(n_z, 96))

    def bdata(z, t):
        if space.k:
            ang = np.arctan2((space.gamma + 1.0) * t[:, 0], np.sum(z * z, axis=-1) ** ((space.gamma + 1.0) / 2.0))
        else:
            ang = np.arctan2(z[:, -1], z[:, 0])
        return 1.0 + 0.5 * np.sin(3.0 * ang)

    slopes = []
    rows = []
    knorm = {}
    for K in Ks:
        V = lambda z, t, K=K: K * angle(space, z, t)
        sol = solve_linear(op_id, V, AnnulusDomain(0.0, r_out), bdata, grid, tol=tol)
        rep = vanishing_order(sol, radii)
        slopes.append(rep.sup_slope)
        knorm[K] = float(np.sqrt(np.sum(sol.values[sol.interior] ** 2) * grid.cellvol))
        for r, s, p in zip(rep.radii, rep.sup_values, rep.profile_integrals):
            rows.append({"K": K, "r": r, "sup": s, "profile": p})
    report.add_table("ucp_vanishing", rows)
    e = fit_exponent_ratio(Ks, slopes)
    monotone = bool(np.all(np.diff(slopes) >= -1e-9))
    report.add(CheckRecord("vanishing-order-sweep", "vanishing-order-sweep",
                           {"slopes": {str(k): s for k, s in zip(Ks, slopes)}, "exponent": e,
                            "monotone": monotone},
                           1.0, "pass" if (e <= 1.0 and monotone) else "fail"))
    if baselines is not None:
        cmp = baselines.compare_or_insert("ucp/K10-solution-norm", knorm.get(10.0, 0.0), rel_tol=0.05)
        if cmp["status"] == "drift":
            report.add(CheckRecord("ucp-baseline-drift", "vanishing-order-sweep", cmp, 0.05, "fail"))

    fp_tol = 1e-8
    fs = PotentialSpec("sublinear", q=1.5, kappa=0.5)
    sol = solve_sublinear(op_id, fs, None, AnnulusDomain(0.0, r_out), 1.0,
                          FDGrid(space, r_out, n_z=min(n_z, 48)), tol=fp_tol)
    # residual of the converged iterate in the discrete equation; the operator
    # rows scale like h^-2, so the admissible residual is 10 tol times that
    g = sol.grid
    L, interior = assemble_operator(op_id, g, AnnulusDomain(0.0, r_out))
    res = (L @ sol.values) + fs.f_of(sol.values) * g.psi
    rnorm = float(np.max(np.abs(res[interior])))
    row_scale = float(np.max(np.abs(L.diagonal())))
    ok = sol.converged and rnorm <= 10.0 * fp_tol * row_scale
    report.add(CheckRecord("sublinear-fixpoint", "sublinear-fixpoint",
                           {"iterations": sol.iterations,
                            "final_increment": sol.history[-1] if sol.history else 0.0,
                            "equation_residual": rnorm,
                            "residual_bound": 10.0 * fp_tol * row_scale},
                           None, "pass" if ok else "fail"))
    return report
