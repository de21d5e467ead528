"""Batch driver.

    grushin verify   --config cfg.yaml [--out DIR] [--threads N] [--seed S]
    grushin carleman --config cfg.yaml ...
    grushin ucp      --config cfg.yaml ...
    grushin baseline --config cfg.yaml ...

`verify` runs the identity and structural-bound suites, `carleman` the
inequality cases selected in the config, `ucp` the solver experiments, and
`baseline` everything, updating (or checking) the baseline store.  Exit
status: 0 when no unexpected check failed, 1 on failures or a runtime
error inside a suite (a partial report is still written), 2 on config
schema violations (nothing is written).
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .config import ConfigError, load_config
from .reporting import BaselineStore, VerificationReport
from . import suites


def _suite_sequence(cfg, command: str):
    wanted = cfg["suites"]
    if command == "verify":
        return [s for s in wanted if s in ("identities", "theorem24")]
    if command == "carleman":
        return [s for s in wanted if s.startswith("carleman:")]
    if command == "ucp":
        return [s for s in wanted if s == "ucp"]
    return list(wanted)


def run_config(path, command: str = "baseline", out=None, threads=None, seed=None) -> int:
    """Execute the selected suites; returns the process exit status."""
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if seed is not None:
        cfg["seed"] = int(seed)
    threads = int(threads if threads is not None else cfg.get("threads", 1))
    out_dir = Path(out if out is not None else cfg.get("out", "grushin-out"))

    baselines = None
    if command == "baseline" or "baseline_store" in cfg:
        store_path = cfg.get("baseline_store", str(out_dir / "baselines.json"))
        baselines = BaselineStore(store_path)

    report = VerificationReport(config_echo=cfg, seed=cfg.get("seed", 0))
    status = 0
    for suite in _suite_sequence(cfg, command):
        try:
            if suite == "identities":
                suites.run_identities(cfg, report)
            elif suite == "theorem24":
                suites.run_theorem24(cfg, report, baselines=baselines)
            elif suite.startswith("carleman:"):
                suites.run_carleman(cfg, report, suite.split(":", 1)[1], baselines=baselines, threads=threads)
            elif suite == "ucp":
                suites.run_ucp(cfg, report, baselines=baselines)
        except Exception:
            print(f"suite {suite} raised:", file=sys.stderr)
            traceback.print_exc()
            status = 1
            break

    report.finish()
    report.write(out_dir)
    if baselines is not None:
        baselines.save()

    for r in report.records:
        flag = "PASS" if r.verdict == "pass" else ("FAIL" if r.verdict == "fail" else "diag")
        if r.verdict == "fail" and r.expected_failure:
            flag = "fail (expected)"
        print(f"[{flag}] {r.name}")
    if report.failed:
        status = max(status, 1)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="grushin", description="verification toolkit batch driver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "carleman", "ucp", "baseline"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML or JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default from config)")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    return run_config(args.config, command=args.command, out=args.out,
                      threads=args.threads, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
