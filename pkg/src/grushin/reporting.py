"""Machine-readable verification reports and the regression baseline store.

A report is a list of check records, each carrying the identifier of the
mathematical fact it exercises (an anchor), the measured values, the
tolerance, and a verdict in {pass, fail, diagnostic}.  Anchors must be
registered by the producing module: reports refuse orphan checks, which
keeps every record traceable to a definition in the code base.

Baselines: derived quantities with no closed form (measured suprema,
archived inequality constants, converged integrals) are frozen on first
run into a JSON store and compared within declared tolerances afterward;
drift is reported as failure.
"""

from __future__ import annotations

import csv
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CheckRecord",
    "VerificationReport",
    "register_anchor",
    "registered_anchors",
    "BaselineStore",
]

_ANCHOR_REGISTRY: set[str] = set()

VERDICTS = ("pass", "fail", "diagnostic")


def register_anchor(*names: str) -> None:
    _ANCHOR_REGISTRY.update(names)


def registered_anchors() -> frozenset:
    return frozenset(_ANCHOR_REGISTRY)


@dataclass
class CheckRecord:
    name: str
    anchor: str
    values: dict
    tolerance: float | None
    verdict: str
    expected_failure: bool = False

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if self.anchor not in _ANCHOR_REGISTRY:
            raise ValueError(f"anchor {self.anchor!r} is not registered by any module")
        self.values = {k: (float(v) if isinstance(v, (int, float, np.floating)) else v) for k, v in self.values.items()}


@dataclass
class VerificationReport:
    config_echo: dict
    seed: int
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)   # name -> list of row dicts (plot-ready)
    started: float = field(default_factory=time.time)
    wall_clock: float = 0.0

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def add_table(self, name: str, rows: list) -> None:
        self.tables[name] = rows

    def finish(self) -> "VerificationReport":
        self.wall_clock = time.time() - self.started
        return self

    @property
    def failed(self) -> list:
        return [r for r in self.records if r.verdict == "fail" and not r.expected_failure]

    def environment_stamp(self) -> dict:
        return {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "machine": platform.machine(),
        }

    def to_dict(self, with_timestamp: bool = True) -> dict:
        out = {
            "schema_version": 1,
            "config": self.config_echo,
            "seed": self.seed,
            "environment": self.environment_stamp(),
            "records": [
                {
                    "name": r.name,
                    "anchor": r.anchor,
                    "values": r.values,
                    "tolerance": r.tolerance,
                    "verdict": r.verdict,
                    "expected_failure": r.expected_failure,
                }
                for r in self.records
            ],
            "n_fail": len(self.failed),
        }
        if with_timestamp:
            out["wall_clock_s"] = self.wall_clock
            out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        return out

    def write(self, out_dir) -> Path:
        """JSON report plus one CSV per table and a gnuplot script."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "report.json"
        report_path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

        rows = [
            {"name": r.name, "anchor": r.anchor, "verdict": r.verdict,
             "tolerance": "" if r.tolerance is None else f"{r.tolerance:.17g}",
             **{k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.values.items()}}
            for r in self.records
        ]
        if rows:
            keys = sorted({k for row in rows for k in row}, key=lambda s: (s not in ("name", "anchor", "verdict"), s))
            with open(out_dir / "checks.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
                w.writeheader()
                w.writerows(rows)

        plot_lines = ["set datafile separator ','", "set key autotitle columnhead", "set logscale x"]
        for name, table in self.tables.items():
            if not table:
                continue
            keys = list(table[0].keys())
            path = out_dir / f"{name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
                w.writeheader()
                for row in table:
                    w.writerow({k: (f"{v:.17g}" if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
            if len(keys) >= 2:
                plot_lines.append(f"set output '{name}.png'")
                plot_lines.append(f"plot '{name}.csv' using 1:2 with linespoints")
        (out_dir / "plots.gnuplot").write_text("\n".join(plot_lines) + "\n")
        return report_path


class BaselineStore:
    """Versioned JSON store of archived regression quantities."""

    def __init__(self, path):
        self.path = Path(path)
        if self.path.exists():
            try:
                self.data = json.loads(self.path.read_text())
            except json.JSONDecodeError as exc:
                raise ValueError(f"baseline store {self.path} is corrupt: {exc}") from exc
            if self.data.get("store_version") != 1:
                raise ValueError("unsupported baseline store version")
        else:
            self.data = {"store_version": 1, "quantities": {}}

    def compare_or_insert(self, name: str, value: float, rel_tol: float) -> dict:
        """First sighting records the value; later ones check the drift."""
        q = self.data["quantities"]
        value = float(value)
        if name not in q:
            q[name] = {"value": value, "rel_tol": float(rel_tol)}
            return {"name": name, "status": "recorded", "value": value, "drift": 0.0}
        ref = q[name]
        scale = max(abs(ref["value"]), 1e-300)
        drift = abs(value - ref["value"]) / scale
        status = "ok" if drift <= ref["rel_tol"] else "drift"
        return {"name": name, "status": status, "value": value,
                "reference": ref["value"], "drift": drift, "rel_tol": ref["rel_tol"]}

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
