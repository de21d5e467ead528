"""Batch driver: config validation, exit codes, report artifacts, determinism."""

import json
from pathlib import Path

import pytest
import yaml

from grushin.cli import main, run_config
from grushin.config import ConfigError, load_config
from grushin.reporting import BaselineStore, CheckRecord, VerificationReport, register_anchor

BASE_CFG = {
    "space": {"m": 1, "k": 1, "gamma": 1.0},
    "coefficients": {"family": "block", "f": 0.1, "g": 0.1, "h": 0.1},
    "suites": ["identities"],
    "seed": 11,
}


def write_cfg(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


def test_load_config_rejects_unknown_keys(tmp_path):
    cfg = dict(BASE_CFG)
    cfg["surprise"] = 1
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, cfg))


def test_load_config_rejects_bad_types(tmp_path):
    cfg = {"space": {"m": 0, "k": 1, "gamma": 1.0}, "suites": ["identities"]}
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, cfg))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_json_config_accepted(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(BASE_CFG))
    assert load_config(p)["seed"] == 11


def test_malformed_config_exits_2(tmp_path, capsys):
    p = tmp_path / "cfg.yaml"
    p.write_text("space: [not, a, mapping\n")
    assert run_config(p, command="verify") == 2
    cfg = dict(BASE_CFG)
    cfg["rogue"] = True
    assert run_config(write_cfg(tmp_path, cfg), command="verify") == 2
    # nothing was written
    assert not (Path("grushin-out") / "report.json").exists()


def test_verify_writes_report_and_exits_0(tmp_path, capsys):
    cfg = dict(BASE_CFG)
    cfg["out"] = str(tmp_path / "out")
    rc = main(["verify", "--config", str(write_cfg(tmp_path, cfg))])
    assert rc == 0
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["n_fail"] == 0
    assert all(r["verdict"] == "pass" for r in rep["records"])
    assert (tmp_path / "out" / "checks.csv").exists()
    assert (tmp_path / "out" / "plots.gnuplot").exists()


def test_expected_hypothesis_failure_exits_0(tmp_path, capsys):
    cfg = {
        "space": {"m": 1, "k": 1, "gamma": 1.0},
        "coefficients": {"family": "violating", "p": 0.5, "expect_hypothesis_failure": True},
        "suites": ["theorem24"],
        "samples": {"n": 800},
        "seed": 3,
        "out": str(tmp_path / "out"),
    }
    assert run_config(write_cfg(tmp_path, cfg), command="verify") == 0
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    rec = next(r for r in rep["records"] if r["name"] == "structural-hypothesis")
    assert rec["verdict"] == "fail" and rec["expected_failure"]


def test_unexpected_hypothesis_failure_exits_1(tmp_path, capsys):
    cfg = {
        "space": {"m": 1, "k": 1, "gamma": 1.0},
        "coefficients": {"family": "violating", "p": 0.5},
        "suites": ["theorem24"],
        "samples": {"n": 800},
        "seed": 3,
        "out": str(tmp_path / "out"),
    }
    assert run_config(write_cfg(tmp_path, cfg), command="verify") == 1


def test_determinism_value_identical_reports(tmp_path, capsys):
    cfg = {
        "space": {"m": 1, "k": 1, "gamma": 1.0},
        "coefficients": {"family": "block", "f": 0.1, "g": 0.1, "h": 0.1},
        "suites": ["identities", "carleman:est1"],
        "quadrature": {"n_z": 24},
        "carleman": {"sweep": [20, 40], "members": 3},
        "seed": 5,
    }
    outs = []
    for run in ("a", "b"):
        cfg["out"] = str(tmp_path / run)
        assert run_config(write_cfg(tmp_path, cfg, f"{run}.yaml"), command="baseline") == 0
        d = json.loads((tmp_path / run / "report.json").read_text())
        d.pop("timestamp")
        d.pop("wall_clock_s")
        d["config"].pop("out")
        outs.append(d)
    assert outs[0] == outs[1]
    csv_a = (tmp_path / "a" / "carleman_est1_sweep.csv").read_bytes()
    csv_b = (tmp_path / "b" / "carleman_est1_sweep.csv").read_bytes()
    assert csv_a == csv_b


def test_baseline_store_roundtrip(tmp_path):
    store = BaselineStore(tmp_path / "b.json")
    first = store.compare_or_insert("x/y", 1.0, rel_tol=0.1)
    assert first["status"] == "recorded"
    store.save()
    store2 = BaselineStore(tmp_path / "b.json")
    assert store2.compare_or_insert("x/y", 1.05, rel_tol=0.1)["status"] == "ok"
    assert store2.compare_or_insert("x/y", 1.5, rel_tol=0.1)["status"] == "drift"
    (tmp_path / "c.json").write_text("{broken")
    with pytest.raises(ValueError):
        BaselineStore(tmp_path / "c.json")


def test_baseline_drift_fails_run(tmp_path, capsys):
    cfg = {
        "space": {"m": 1, "k": 1, "gamma": 1.0},
        "coefficients": {"family": "block", "f": 0.1, "g": 0.1, "h": 0.1},
        "suites": ["carleman:est1"],
        "quadrature": {"n_z": 24},
        "carleman": {"sweep": [20], "members": 2},
        "seed": 5,
        "baseline_store": str(tmp_path / "store.json"),
        "out": str(tmp_path / "out"),
    }
    p = write_cfg(tmp_path, cfg)
    assert run_config(p, command="baseline") == 0
    # rerun against the stored values: zero drift
    assert run_config(p, command="baseline") == 0
    # poison the store: the same run now drifts and fails
    store = json.loads((tmp_path / "store.json").read_text())
    store["quantities"]["carleman/est1/constant"]["value"] *= 3.0
    (tmp_path / "store.json").write_text(json.dumps(store))
    assert run_config(p, command="baseline") == 1


def test_report_rejects_unregistered_anchor():
    with pytest.raises(ValueError):
        CheckRecord("x", "never-registered-anchor", {}, None, "pass")
    register_anchor("ad-hoc-anchor")
    rec = CheckRecord("x", "ad-hoc-anchor", {"v": 1.0}, None, "diagnostic")
    rep = VerificationReport(config_echo={}, seed=0)
    rep.add(rec)
    assert rep.to_dict()["records"][0]["anchor"] == "ad-hoc-anchor"
    with pytest.raises(ValueError):
        CheckRecord("x", "ad-hoc-anchor", {}, None, "maybe")
