"""Evaluation report assembly and serialization.

One report per run: accuracies, per-class table, sample-statistics
metrics, the resolved config snapshot, and every derived seed, so a run
can be audited and replayed. JSON is the full record; summary.csv and
per_class.csv are flat views with fixed schemas.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.csv"
PER_CLASS_FILE = "per_class.csv"
SWEEP_FILE = "sweep.csv"

PER_CLASS_HEADER = ["class", "model_acc", "real_acc", "gap", "flag_zero"]
SWEEP_HEADER = ["grid_value", "cas_top1", "cas_topk", "is_mean", "is_std", "fid", "kid"]
SUMMARY_HEADER = ["key", "value"]


def run_id_for(config_snapshot: dict) -> str:
    """Deterministic 12-hex run id from the resolved config."""
    canonical = json.dumps(config_snapshot, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _fmt(value) -> str:
    """CSV cell formatting: shortest round-trip repr for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class EvaluationReport:
    """Everything a run produced. Optional sections stay None/empty when
    the corresponding metric was toggled off."""

    run_id: str = ""
    timestamp: str = ""
    k: int = 1
    baseline_top1: float = math.nan
    baseline_topk: float = math.nan
    cas_top1: float | None = None
    cas_topk: float | None = None
    is_mean: float | None = None
    is_std: float | None = None
    fid: float | None = None
    kid: float | None = None
    gan_test_top1: float | None = None
    gan_test_topk: float | None = None
    nas: list = field(default_factory=list)  # rows: {fraction, top1, topk}
    per_class: list = field(default_factory=list)  # GapRow list
    per_class_fid: list | None = None  # opt-in; rows: {class, fid}
    per_class_fid_note: str | None = None
    embedder: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    def stamp(self) -> None:
        self.timestamp = datetime.now(timezone.utc).isoformat()

    def to_json(self) -> str:
        payload = {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "k": self.k,
            "baseline_top1": self.baseline_top1,
            "baseline_topk": self.baseline_topk,
            "cas_top1": self.cas_top1,
            "cas_topk": self.cas_topk,
            "is_mean": self.is_mean,
            "is_std": self.is_std,
            "fid": self.fid,
            "kid": self.kid,
            "gan_test_top1": self.gan_test_top1,
            "gan_test_topk": self.gan_test_topk,
            "nas": self.nas,
            "per_class": [asdict(r) for r in self.per_class],
            "per_class_fid": self.per_class_fid,
            "per_class_fid_note": self.per_class_fid_note,
            "embedder": self.embedder,
            "config": self.config,
            "seeds": self.seeds,
        }
        return json.dumps(payload, indent=2, allow_nan=True) + "\n"

    def summary_rows(self) -> list:
        rows = [
            ("run_id", self.run_id),
            ("k", self.k),
            ("baseline_top1", self.baseline_top1),
            ("baseline_topk", self.baseline_topk),
        ]
        for key in ("cas_top1", "cas_topk", "is_mean", "is_std", "fid", "kid",
                    "gan_test_top1", "gan_test_topk"):
            value = getattr(self, key)
            if value is not None:
                rows.append((key, value))
        for entry in self.nas:
            rows.append((f"nas_{entry['fraction']:g}_top1", entry["top1"]))
            rows.append((f"nas_{entry['fraction']:g}_topk", entry["topk"]))
        return rows

    def summary_csv(self) -> str:
        return _csv_text(SUMMARY_HEADER, self.summary_rows())

    def per_class_csv(self) -> str:
        rows = [
            (r.class_id, r.model_acc, r.real_acc, r.gap, r.flag_zero)
            for r in self.per_class
        ]
        return _csv_text(PER_CLASS_HEADER, rows)

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / REPORT_FILE).write_text(self.to_json())
        (out_dir / SUMMARY_FILE).write_text(self.summary_csv())
        if self.per_class:
            (out_dir / PER_CLASS_FILE).write_text(self.per_class_csv())


@dataclass
class SweepResult:
    """One row per grid value plus the CAS-vs-metric correlations."""

    run_id: str = ""
    timestamp: str = ""
    variable: str = "truncation"
    grid: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # dicts keyed by SWEEP_HEADER
    pearson_cas_fid: float | None = None
    pearson_cas_is: float | None = None
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    @property
    def correlations_defined(self) -> bool:
        return self.pearson_cas_fid is not None and self.pearson_cas_is is not None

    def stamp(self) -> None:
        self.timestamp = datetime.now(timezone.utc).isoformat()

    def sweep_csv(self) -> str:
        rows = [[row[key] for key in SWEEP_HEADER] for row in self.rows]
        return _csv_text(SWEEP_HEADER, rows)

    def summary_csv(self) -> str:
        rows = [
            ("run_id", self.run_id),
            ("sweep_variable", self.variable),
            ("grid_size", len(self.grid)),
            ("pearson_cas_top1_vs_fid", self.pearson_cas_fid),
            ("pearson_cas_top1_vs_is", self.pearson_cas_is),
            ("pearson_defined", self.correlations_defined),
        ]
        return _csv_text(SUMMARY_HEADER, rows)

    def to_json(self) -> str:
        payload = {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "sweep_variable": self.variable,
            "grid": self.grid,
            "rows": self.rows,
            "pearson_cas_top1_vs_fid": self.pearson_cas_fid,
            "pearson_cas_top1_vs_is": self.pearson_cas_is,
            "pearson_defined": self.correlations_defined,
            "config": self.config,
            "seeds": self.seeds,
        }
        return json.dumps(payload, indent=2, allow_nan=True) + "\n"

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / REPORT_FILE).write_text(self.to_json())
        (out_dir / SWEEP_FILE).write_text(self.sweep_csv())
        (out_dir / SUMMARY_FILE).write_text(self.summary_csv())
