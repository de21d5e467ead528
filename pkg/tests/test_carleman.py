"""Inequality evaluation: trivial cases, reductions, sweeps, cross-checks."""

import numpy as np
import pytest

from grushin import GrushinSpace
from grushin.carleman import (
    CarlemanCase,
    PotentialSpec,
    SupportViolation,
    TestMember,
    constant_estimate,
    evaluate_sides,
    parameter_sweep,
    standard_suite,
    substitution_check,
)
from grushin.coefficients import BlockFamily, IdentityCoefficients
from grushin.fields import Const, Profile, RadialField
from grushin.operators import DegenerateOperator
from grushin.quadrature import QuadratureGrid

GRID = QuadratureGrid(n_z=48, inner_refine=2)


@pytest.fixture
def op_id(sp11, identity11):
    return DegenerateOperator(sp11, identity11)


@pytest.fixture
def op_block(sp11, block11):
    return DegenerateOperator(sp11, block11)


def test_case_validation(sp11):
    with pytest.raises(ValueError):
        CarlemanCase("nope", 40.0)
    with pytest.raises(ValueError):
        CarlemanCase("est1", -1.0)
    with pytest.raises(ValueError):
        CarlemanCase("est1", 40.0, epsilon=1.5)
    with pytest.raises(ValueError):
        CarlemanCase("har1", 40.0, R=1.2)
    with pytest.raises(ValueError):
        CarlemanCase("df", 40.0)              # needs a potential
    with pytest.raises(ValueError):
        CarlemanCase("f10", 40.0, potential=PotentialSpec("bounded"))
    # the exponent relation 2 beta - 2 alpha - 4 = -Q
    c = CarlemanCase("est1", 40.0)
    assert 2 * c.beta(sp11) - 2 * 40.0 - 4.0 == pytest.approx(-sp11.Q)


def test_sublinear_spec_structure():
    fs = PotentialSpec("sublinear", q=1.5, kappa=0.7)
    chk = fs.check_sublinear()
    assert chk["positive"] and chk["sf_le_qG"] and chk["bracketed"]
    assert chk["f_at_zero"] == 0.0
    with pytest.raises(ValueError):
        PotentialSpec("sublinear", q=2.5)


def test_standard_suite_composition(sp11):
    suite = standard_suite(sp11)
    kinds = [m.kind for m in suite]
    assert len(suite) == 20
    assert kinds.count("radial") == 10 and kinds.count("angular") == 5 and kinds.count("tensor") == 5
    for m in suite:
        lo, hi = m.support
        assert 0.0 < lo < hi <= 0.62


def test_zero_function_gives_zero_ratio(sp11, op_id):
    member = TestMember("zero", Const(sp11, 0.0) * RadialField(sp11, Profile.poly_bump(0.3, 0.5)), (0.3, 0.5), "radial")
    ev = evaluate_sides(CarlemanCase("est1", 40.0), op_id, member, GRID)
    assert ev["ratio"] == 0.0 and ev["rhs"] == 0.0


def test_support_violation_rejected(sp11, op_id):
    member = TestMember("wide", RadialField(sp11, Profile.poly_bump(0.3, 0.9)), (0.3, 0.9), "radial")
    with pytest.raises(SupportViolation):
        evaluate_sides(CarlemanCase("est1", 40.0, R=0.6), op_id, member, GRID)


def test_est1_inequality_holds(sp11, op_id):
    suite = standard_suite(sp11)
    case = CarlemanCase("est1", 40.0)
    ev = evaluate_sides(case, op_id, suite[0], GRID)
    assert 0.0 < ev["ratio"] < 1.0
    assert all(v >= 0.0 for v in ev["lhs_terms"].values())


def test_df_reduces_to_est1_without_potential(sp11, op_block):
    """V == 0 makes the df evaluation coincide with est1 exactly."""
    suite = standard_suite(sp11)
    df = CarlemanCase("df", 40.0, potential=PotentialSpec("c1", K=0.0))
    est = CarlemanCase("est1", 40.0)
    e1 = evaluate_sides(df, op_block, suite[1], GRID)
    e2 = evaluate_sides(est, op_block, suite[1], GRID)
    assert e1["ratio"] == pytest.approx(e2["ratio"], rel=1e-14)


def test_f10_reduces_to_est1_without_sublinearity(sp11, op_block):
    """kappa -> 0 removes both the |u|^q term and the source change."""
    suite = standard_suite(sp11)
    f10 = CarlemanCase("f10", 40.0, potential=PotentialSpec("sublinear", q=1.5, kappa=1e-300))
    est = CarlemanCase("est1", 40.0)
    e1 = evaluate_sides(f10, op_block, suite[0], GRID)
    e2 = evaluate_sides(est, op_block, suite[0], GRID)
    assert e1["rhs"] == pytest.approx(e2["rhs"], rel=1e-10)
    assert e1["lhs_terms"]["zero-order"] == pytest.approx(e2["lhs_terms"]["zero-order"], rel=1e-12)


def test_df_reports_effective_K(sp11, op_block):
    suite = standard_suite(sp11)
    case = CarlemanCase("df", 40.0, potential=PotentialSpec("c1", K=10.0))
    ev = evaluate_sides(case, op_block, suite[0], GRID)
    assert 10.0 <= ev["effective_K"] <= 12.0  # K psi plus the |F psi| contribution


@pytest.mark.parametrize("which,param", [("est1", 40.0), ("har1", 40.0)])
def test_substitution_cross_check(sp11, op_block, which, param):
    suite = standard_suite(sp11)
    case = CarlemanCase(which, param)
    for member in (suite[0], suite[12], suite[17]):
        sc = substitution_check(case, op_block, member, GRID)
        ev = evaluate_sides(case, op_block, member, GRID)
        tol = 0.01 + ev["quad_error"] / max(ev["ratio"], 1e-300)
        assert sc["rhs_rel_disagreement"] <= tol
        assert sc["zero_order_rel_disagreement"] <= tol


def test_parameter_sweep_bounded(sp11, op_id):
    suite = standard_suite(sp11)
    sw = parameter_sweep(CarlemanCase("est1", 20.0), op_id, suite[0], GRID, values=(20.0, 40.0, 80.0))
    assert sw["bounded"]
    assert sw["max_growth_per_doubling"] <= 1.10
    assert len(sw["rows"]) == 3


def test_constant_estimate_zero_suite(sp11, op_id):
    member = TestMember("zero", Const(sp11, 0.0) * RadialField(sp11, Profile.poly_bump(0.3, 0.5)), (0.3, 0.5), "radial")
    out = constant_estimate(CarlemanCase("est1", 40.0), op_id, [member], GRID)
    assert out["constant"] == 0.0


def test_constant_estimate_names_failing_member(sp11, op_id):
    bad = TestMember("bad", RadialField(sp11, Profile.poly_bump(0.3, 0.9)), (0.3, 0.9), "radial")
    with pytest.raises(RuntimeError, match="bad"):
        constant_estimate(CarlemanCase("est1", 40.0, R=0.6), op_id, [bad], GRID)


def test_har1_positive_and_stable(sp11, op_id):
    suite = standard_suite(sp11)
    case = CarlemanCase("har1", 40.0)
    ev1 = evaluate_sides(case, op_id, suite[0], GRID)
    ev2 = evaluate_sides(case, op_id, suite[0], QuadratureGrid(n_z=96, inner_refine=2))
    assert ev1["lhs_terms"]["zero-order"] > 0 and ev1["lhs_terms"]["gradient"] > 0 and ev1["rhs"] > 0
    assert ev2["ratio"] == pytest.approx(ev1["ratio"], rel=0.05)
