"""Gauge-ball quadrature: volumes, scaling laws, weights, error estimates."""

import numpy as np
import pytest

from grushin import GrushinSpace
from grushin.fields import Profile, RadialField
from grushin.quadrature import (
    AnnulusDomain,
    QuadratureGrid,
    WeightedIntegral,
    integrate,
    nodes,
    vanishing_profile_integral,
)

B1_VOLUME = 1.7480383695280799      # int_{-1}^{1} sqrt(1 - z^4) dz, high precision
B1_PSI_INTEGRAL = 0.7987601564903948


def one(z, t):
    return np.ones(z.shape[0])


def test_domain_validation():
    with pytest.raises(ValueError):
        AnnulusDomain(0.5, 0.5)
    with pytest.raises(ValueError):
        AnnulusDomain(-0.1, 0.5)


def test_ball_volume_and_mc_oracle(sp11):
    v, e = integrate(sp11, AnnulusDomain(0.0, 1.0), QuadratureGrid(n_z=64), one)
    assert v == pytest.approx(B1_VOLUME, rel=2e-4)
    # Monte-Carlo oracle, independent of the cell machinery
    rng = np.random.default_rng(123)
    n = 10 ** 6
    z = rng.uniform(-1, 1, n)
    t = rng.uniform(-0.5, 0.5, n)
    mc = 2.0 * np.mean(z ** 4 + 4 * t ** 2 < 1.0)
    assert v == pytest.approx(mc, rel=5e-3)


def test_volume_scaling_law(sp11):
    grid = QuadratureGrid(n_z=64)
    v1, _ = integrate(sp11, AnnulusDomain(0.0, 1.0), grid, one)
    for r in (0.5, 0.25):
        vr, _ = integrate(sp11, AnnulusDomain(0.0, r), grid, one)
        assert vr / v1 == pytest.approx(r ** sp11.Q, rel=0.01)


def test_psi_profile_exponent(sp11):
    grid = QuadratureGrid(n_z=64)
    vals = []
    for r in (1.0, 0.5, 0.25):
        v, _ = integrate(sp11, AnnulusDomain(0.0, r), grid, one, weight=WeightedIntegral(psi_power=1.0))
        vals.append(v)
    assert vals[0] == pytest.approx(B1_PSI_INTEGRAL, rel=2e-3)
    slope = np.polyfit(np.log([1.0, 0.5, 0.25]), np.log(vals), 1)[0]
    assert slope == pytest.approx(sp11.Q, abs=0.05)


def test_homogeneous_integrand_scaling(sp11):
    """int_{B_r} rho^s psi = r^{s+Q} int_{B_1} rho^s psi within 1%."""
    grid = QuadratureGrid(n_z=64)
    s = 1.5
    f = lambda z, t: np.ones(z.shape[0])
    w = WeightedIntegral(a=s, psi_power=1.0)
    v1, _ = integrate(sp11, AnnulusDomain(0.0, 1.0), grid, f, weight=w)
    v2, _ = integrate(sp11, AnnulusDomain(0.0, 0.5), grid, f, weight=w)
    assert v2 / v1 == pytest.approx(0.5 ** (s + sp11.Q), rel=0.01)


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightedIntegral(alpha=10.0)          # missing epsilon
    with pytest.raises(ValueError):
        WeightedIntegral(alpha=10.0, eps=1.5)
    with pytest.raises(ValueError):
        WeightedIntegral(alpha=10.0, eps=0.5, beta=1.0)
    with pytest.raises(ValueError):
        integrate(GrushinSpace(1, 1, 1.0), AnnulusDomain(0.2, 0.8), QuadratureGrid(n_z=16),
                  one, weight=WeightedIntegral(mu_power=1.0))


def test_singular_weight_on_annulus(sp11):
    """rho^{-Q} psi over an annulus: finite, stable under refinement to 0.5%."""
    w = WeightedIntegral(a=-sp11.Q, psi_power=1.0)
    v1, e1 = integrate(sp11, AnnulusDomain(0.5, 1.0), QuadratureGrid(n_z=48), one, weight=w)
    v2, _ = integrate(sp11, AnnulusDomain(0.5, 1.0), QuadratureGrid(n_z=96), one, weight=w)
    assert abs(v2 - v1) / v1 < 5e-3
    assert abs(v2 - v1) <= 2 * e1 + 1e-12


def test_error_estimates_conservative(sp11):
    """Reported estimate covers the observed refinement change >= 90% of runs."""
    hits = 0
    cases = []
    for r_in, r_out, a, psi_p in [(0.0, 1.0, 0.0, 0.0), (0.0, 1.0, 0.0, 1.0), (0.5, 1.0, -3.0, 1.0),
                                  (0.25, 0.75, -1.0, 0.0), (0.0, 0.5, 1.0, 1.0)]:
        w = WeightedIntegral(a=a, psi_power=psi_p)
        v, e = integrate(sp11, AnnulusDomain(r_in, r_out), QuadratureGrid(n_z=48), one, weight=w)
        v2, _ = integrate(sp11, AnnulusDomain(r_in, r_out), QuadratureGrid(n_z=96), one, weight=w)
        cases.append((abs(v2 - v), e))
        hits += abs(v2 - v) <= e
    assert hits / len(cases) >= 0.9, cases


def test_near_characteristic_insensitivity(sp11):
    """Dropping the near-axis cells changes psi-weighted integrals below the estimate."""
    w = WeightedIntegral(psi_power=1.0)
    v, e = integrate(sp11, AnnulusDomain(0.0, 1.0), QuadratureGrid(n_z=64), one, weight=w)

    def masked(z, t):
        return np.where(np.abs(z[:, 0]) < 1e-6, 0.0, 1.0)

    v2, _ = integrate(sp11, AnnulusDomain(0.0, 1.0), QuadratureGrid(n_z=64), masked, weight=w)
    assert abs(v2 - v) <= e + 1e-12


def test_vanishing_profile_integrals(sp11):
    zero = lambda z, t: np.zeros(z.shape[0])
    assert vanishing_profile_integral(sp11, zero, 0.5)[0] == 0.0
    # u = rho^s: exponent of int_{B_r} u^2 psi is 2s + Q
    u = RadialField(sp11, Profile.power(1.0))
    vals = [vanishing_profile_integral(sp11, u, r, QuadratureGrid(n_z=48))[0] for r in (1.0, 0.5, 0.25)]
    slope = np.polyfit(np.log([1.0, 0.5, 0.25]), np.log(vals), 1)[0]
    assert slope == pytest.approx(2.0 + sp11.Q, abs=0.05)


def test_node_cap(sp11):
    with pytest.raises(ValueError):
        nodes(sp11, AnnulusDomain(0.0, 1.0), QuadratureGrid(n_z=4096, cell_cap=100000))
