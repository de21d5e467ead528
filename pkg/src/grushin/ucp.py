"""Desk-scale unique-continuation experiments.

In Euclidean coordinates the operator is div(A~ grad u) with
A~ = D A D, D = diag(1,...,1, |z|^gamma, ..., |z|^gamma): an ordinary
divergence-form operator whose t-block coefficient degenerates on {z = 0}.
The solver discretises it with a cell-centered finite-volume stencil:
diagonal terms use face fluxes with arithmetically averaged a_dd and the
degenerate |z|^{2 gamma} factor taken at the face center (for t-fluxes the
face shares the cell's z, so constants are annihilated exactly); mixed
terms use centered differences.  Gauge boundaries are imposed by flagging:
cells whose center leaves the annulus are Dirichlet cells carrying the
boundary datum, a first-order localisation that costs nothing when the
datum is an exact solution evaluated everywhere.

Equations:  L u = V u (+ source), solved sparsely and iteratively, and the
sublinear problem -L u = f(., u) psi + V u via a damped fixed-point loop
whose iterates solve linear problems with the previous nonlinearity frozen.

Vanishing-order diagnostics fit log-log slopes of sup_{B_r} |u| and of
int_{B_r} u^2 psi against r; for potential families V = K psi the fitted
slope growth exponent in K is reported (the quantitative-uniqueness
theorems bound the vanishing order by K^{2/3} and sqrt(K) type rates, so
the experiment asserts only monotonicity and an exponent <= 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .coefficients import CoefficientField
from .geometry import GrushinSpace, gauge, angle
from .operators import DegenerateOperator
from .quadrature import AnnulusDomain

__all__ = [
    "FDGrid",
    "DiscreteSolution",
    "VanishingOrderReport",
    "assemble_operator",
    "solve_linear",
    "solve_sublinear",
    "vanishing_order",
    "fit_exponent_ratio",
]


class ConvergenceError(RuntimeError):
    pass


@dataclass
class FDGrid:
    """Cell-centered tensor grid on a padded box around B_{r_out}.

    n_z cells per z-axis; t-axes default to the anisotropy rule
    n_t ~ n_z * (t-extent / z-extent) * (gamma + 1), even counts so no cell
    center sits on {z_i = 0}.
    """

    space: GrushinSpace
    r_out: float
    n_z: int = 64
    n_t: int | None = None
    pad: float = 0.10

    def __post_init__(self):
        sp = self.space
        g1 = sp.gamma + 1.0
        nz = int(self.n_z) + int(self.n_z) % 2
        # pad is a minimum: the box keeps at least ~2.5 Dirichlet cells beyond
        # the outer gauge sphere so every interior stencil closes
        pad = max(self.pad, 6.0 / nz)
        self.Lz = self.r_out * (1.0 + pad)
        self.Lt = (self.r_out ** g1 / g1) * (1.0 + pad * g1)
        if self.n_t is None:
            nt = int(round(nz * (self.Lt / self.Lz) * g1))
        else:
            nt = int(self.n_t)
        nt += nt % 2
        self.counts = [nz] * sp.m + [max(4, nt)] * sp.k
        self.half = [self.Lz] * sp.m + [self.Lt] * sp.k
        self.h = [2.0 * L / n for L, n in zip(self.half, self.counts)]
        axes = [
            (-L + (np.arange(n) + 0.5) * hh) for L, n, hh in zip(self.half, self.counts, self.h)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
        self.z = pts[:, : sp.m]
        self.t = pts[:, sp.m:]
        self.shape = tuple(self.counts)
        self.strides = np.array([int(np.prod(self.counts[d + 1:])) for d in range(len(self.counts))])
        self.rho = gauge(sp, self.z, self.t)
        self.psi = angle(sp, self.z, self.t)
        self.cellvol = float(np.prod(self.h))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.counts))

    def refined(self, factor: int = 2) -> "FDGrid":
        return FDGrid(self.space, self.r_out, self.n_z * factor,
                      None if self.n_t is None else self.n_t * factor, self.pad)


def _degenerate_factor(space: GrushinSpace, z, axis: int) -> np.ndarray:
    if axis < space.m:
        return np.ones(z.shape[0])
    return np.sum(z * z, axis=-1) ** space.gamma


def assemble_operator(op: DegenerateOperator, grid: FDGrid, domain: AnnulusDomain):
    """Sparse discrete L on the full grid, plus the interior mask.

    Returns (L, interior): L includes every cell as a row, with Dirichlet
    handling left to the solver (interior rows reference Dirichlet columns;
    the solver moves them to the right side).
    """
    sp = op.space
    d_tot = sp.m + sp.k
    C = grid.n_cells
    A = op.coeff.matrix(grid.z, grid.t)

    interior = (grid.rho < domain.r_out) & (grid.rho > domain.r_in)
    idx = np.arange(C)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    shape_idx = idx.reshape(grid.shape)
    for d in range(d_tot):
        stride = grid.strides[d]
        h = grid.h[d]
        # interior cells never touch the box edge, so +-stride stays in range
        ii = idx[interior]
        up = ii + stride
        dn = ii - stride
        add_dd = A[:, d, d]
        dfac = _degenerate_factor(sp, grid.z, d)
        c_up = 0.5 * (add_dd[ii] + add_dd[up]) * (dfac[ii] if d >= sp.m else 1.0)
        c_dn = 0.5 * (add_dd[ii] + add_dd[dn]) * (dfac[ii] if d >= sp.m else 1.0)
        if d < sp.m:
            # face center shifts along z_d by +-h/2; the dd entry of the
            # z-block carries no degenerate factor
            c_up = 0.5 * (add_dd[ii] + add_dd[up])
            c_dn = 0.5 * (add_dd[ii] + add_dd[dn])
        add(ii, up, c_up / h ** 2)
        add(ii, dn, c_dn / h ** 2)
        add(ii, ii, -(c_up + c_dn) / h ** 2)

        for e in range(d_tot):
            if e == d:
                continue
            a_de = A[:, d, e]
            fde = np.sqrt(_degenerate_factor(sp, grid.z, d) * _degenerate_factor(sp, grid.z, e))
            coeff = a_de * fde
            se = grid.strides[e]
            he = grid.h[e]
            for sd in (+1, -1):
                base = ii + sd * stride
                for sgn in (+1, -1):
                    add(ii, base + sgn * se, sd * sgn * coeff[base] / (4.0 * h * he))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    L = sparse.csr_matrix((vals, (rows, cols)), shape=(C, C))
    return L, interior


@dataclass
class DiscreteSolution:
    grid: FDGrid
    values: np.ndarray
    interior: np.ndarray
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)

    def sup_in_ball(self, r: float) -> float:
        sel = self.grid.rho <= r
        return float(np.max(np.abs(self.values[sel]))) if np.any(sel) else 0.0

    def profile_integral(self, r: float) -> float:
        sel = self.grid.rho <= r
        return float(np.sum(self.values[sel] ** 2 * self.grid.psi[sel]) * self.grid.cellvol)


def _eval_on_grid(fn, grid: FDGrid) -> np.ndarray:
    if fn is None:
        return np.zeros(grid.n_cells)
    if hasattr(fn, "value"):
        return np.asarray(fn.value(grid.z, grid.t), dtype=float)
    if np.isscalar(fn):
        return np.full(grid.n_cells, float(fn))
    if isinstance(fn, np.ndarray):
        return np.asarray(fn, dtype=float)
    return np.asarray(fn(grid.z, grid.t), dtype=float)


def solve_linear(
    op: DegenerateOperator,
    V,
    domain: AnnulusDomain,
    boundary_data,
    grid: FDGrid,
    tol: float = 1e-10,
    source=None,
    maxiter: int = 20000,
) -> DiscreteSolution:
    """Solve L u = V u + source with Dirichlet data on the flagged cells.

    V, boundary_data and source may be ScalarFields, callables, scalars or
    None.  Iterative solve (ILU-preconditioned BiCGStab) to a relative
    residual <= tol; raises ConvergenceError past the iteration cap.
    """
    L, interior = assemble_operator(op, grid, domain)
    Vv = _eval_on_grid(V, grid)
    bd = _eval_on_grid(boundary_data, grid)
    src = _eval_on_grid(source, grid)

    u = np.array(bd, dtype=float)
    ii = np.where(interior)[0]
    dd = np.where(~interior)[0]
    M = (L - sparse.diags(Vv)).tocsr()
    Mi = M[ii]
    Mii = Mi[:, ii]
    rhs = src[ii] - Mi[:, dd] @ bd[dd]

    count = {"n": 0}

    def cb(xk):
        count["n"] += 1

    try:
        ilu = spla.spilu(Mii.tocsc(), drop_tol=1e-6, fill_factor=12)
        pre = spla.LinearOperator(Mii.shape, ilu.solve)
    except RuntimeError:
        pre = None
    x0 = bd[ii]
    x, info = spla.bicgstab(Mii, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=pre, callback=cb)
    if info != 0:
        raise ConvergenceError(f"linear solve did not reach tol={tol} (info={info}, {count['n']} iterations)")
    u[ii] = x
    res = float(np.linalg.norm(Mii @ x - rhs) / max(np.linalg.norm(rhs), 1e-300))
    return DiscreteSolution(grid=grid, values=u, interior=interior, residual=res,
                            iterations=count["n"], converged=True)


def solve_sublinear(
    op: DegenerateOperator,
    f_spec,
    V,
    domain: AnnulusDomain,
    boundary_data,
    grid: FDGrid,
    tol: float = 1e-8,
    damping: float = 0.7,
    max_outer: int = 60,
) -> DiscreteSolution:
    """Damped fixed-point iteration for -L u = f(., u) psi + V u.

    Starts from the linear solve with f dropped; each sweep freezes
    f(., u_n) and V u_n as a source.  Divergence (three consecutive growing
    increments) is reported through converged=False, with history, rather
    than raised.
    """
    Vv = _eval_on_grid(V, grid)
    sol = solve_linear(op, V, domain, boundary_data, grid, tol=min(1e-10, tol))
    u = sol.values.copy()
    history = []
    grow = 0
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        src = -f_spec.f_of(u) * grid.psi - Vv * u
        step = solve_linear(op, None, domain, boundary_data, grid, tol=min(1e-10, tol), source=src)
        new = (1.0 - damping) * u + damping * step.values
        delta = float(np.max(np.abs(new - u)))
        history.append(delta)
        u = new
        if delta <= tol:
            converged = True
            break
        if len(history) >= 2 and delta > history[-2]:
            grow += 1
            if grow >= 3:
                break
        else:
            grow = 0
    return DiscreteSolution(grid=grid, values=u, interior=sol.interior, residual=history[-1] if history else 0.0,
                            iterations=it, converged=converged, history=history)


@dataclass
class VanishingOrderReport:
    radii: list
    sup_values: list
    profile_integrals: list
    sup_slope: float
    profile_slope: float


def vanishing_order(u, radii, space: GrushinSpace | None = None, grid=None) -> VanishingOrderReport:
    """Log-log slopes of sup_{B_r}|u| and int_{B_r} u^2 psi over the radii.

    u is a DiscreteSolution (grid sampling + cell sums) or a ScalarField
    (needs space; sampled on an auxiliary grid, integrated by quadrature).
    """
    radii = sorted((float(r) for r in radii), reverse=True)
    if isinstance(u, DiscreteSolution):
        if max(radii) > u.grid.r_out:
            raise ValueError("radii exceed the solved domain")
        sups = [u.sup_in_ball(r) for r in radii]
        ints = [u.profile_integral(r) for r in radii]
    else:
        if space is None:
            raise ValueError("a ScalarField needs its space")
        from .quadrature import QuadratureGrid, vanishing_profile_integral

        qg = grid or QuadratureGrid(n_z=48)
        from .geometry import sample_annulus

        sups, ints = [], []
        for r in radii:
            zs, ts = sample_annulus(space, 4000, rho_range=(1e-3 * r, r), psi_range=(1e-4, 1.0), seed=11)
            sups.append(float(np.max(np.abs(u.value(zs, ts)))))
            ints.append(vanishing_profile_integral(space, u, r, qg)[0])
    lr = np.log(radii)
    sup_slope = float(np.polyfit(lr, np.log(np.maximum(sups, 1e-300)), 1)[0])
    prof_slope = float(np.polyfit(lr, np.log(np.maximum(ints, 1e-300)), 1)[0])
    return VanishingOrderReport(
        radii=list(radii), sup_values=list(map(float, sups)), profile_integrals=list(map(float, ints)),
        sup_slope=sup_slope, profile_slope=prof_slope,
    )


def fit_exponent_ratio(K_values, slopes) -> float:
    """Exponent e in slope ~ a K^e + b from the top three of a geometric sweep."""
    K = np.asarray(K_values, dtype=float)
    s = np.asarray(slopes, dtype=float)
    if len(K) < 3:
        raise ValueError("need at least three sweep points")
    d1 = s[-1] - s[-2]
    d2 = s[-2] - s[-3]
    if d2 <= 0 or d1 <= 0:
        return 0.0
    return float(np.log(d1 / d2) / np.log(K[-1] / K[-2]))
