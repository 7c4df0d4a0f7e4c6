"""Verification records, convergence-order fits and report emission (JSON, CSV, SVG)."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


def fit_order(h: Sequence[float], residuals: Sequence[float]) -> float | None:
    """Least-squares slope of log(residual) against log(h); None below two usable levels."""
    h = np.asarray(h, float)
    r = np.asarray(residuals, float)
    ok = (h > 0) & (r > 0) & np.isfinite(r)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(h[ok]), np.log(r[ok]), 1)[0])


def converges(residuals: Sequence[float], order: float | None, min_order: float,
              floor: float = 0.0) -> bool:
    """Order at least ``min_order``, or every level already at the round-off floor."""
    if residuals and max(residuals) <= floor:
        return True
    return order is not None and order >= min_order


@dataclass
class CheckRecord:
    name: str
    paper_ref: str
    passed: bool
    levels: list[int] = field(default_factory=list)
    h: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    order: float | None = None
    tolerance: dict = field(default_factory=dict)
    negative_control: bool = False
    values: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if len(self.levels) != len(self.residuals) or len(self.h) not in (0, len(self.levels)):
            raise ValueError(f"{self.name}: levels, h and residuals must have equal lengths")
        if self.order is None and len(self.levels) >= 2 and self.h:
            self.order = fit_order(self.h, self.residuals)

    @property
    def counts(self) -> bool:
        """Negative controls never decide the exit status."""
        return not self.negative_control


@dataclass
class VerificationReport:
    suite: str
    config: dict = field(default_factory=dict)
    records: list[CheckRecord] = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        return rec

    def extend(self, other: VerificationReport):
        self.records.extend(other.records)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if r.counts)

    def summary(self) -> dict:
        counted = [r for r in self.records if r.counts]
        return {
            "checks": len(self.records),
            "passed": sum(bool(r.passed) for r in counted),
            "failed": [r.name for r in counted if not r.passed],
            "negative_controls": sum(r.negative_control for r in self.records),
            "all_passed": self.passed,
        }

    def to_dict(self) -> dict:
        return _clean({
            "suite": self.suite,
            "summary": self.summary(),
            "config": self.config,
            "environment": environment_stamp(),
            "timestamp": self.timestamp,
            "records": [asdict(r) for r in self.records],
        })


def environment_stamp() -> dict:
    import scipy
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def to_json(report: VerificationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


CSV_HEADER = ["suite", "check", "level", "residual", "order", "pass", "negative_control"]


def csv_rows(report: VerificationReport) -> list[list]:
    rows = []
    for r in report.records:
        order = "" if r.order is None else repr(r.order)
        levels = r.levels or [""]
        res = r.residuals or [""]
        for lev, val in zip(levels, res):
            rows.append([report.suite, r.name, lev, repr(val) if val != "" else "", order,
                         int(r.passed), int(r.negative_control)])
    return rows


def plot_record(rec: CheckRecord, path: Path):
    """Log-log residual against h with the fitted slope in the legend."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "stringphase"

    h = np.asarray(rec.h, float)
    r = np.asarray(rec.residuals, float)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(h, np.maximum(r, 1e-300), "o-", label="residual")
    if rec.order is not None:
        c = np.exp(np.mean(np.log(np.maximum(r, 1e-300)) - rec.order * np.log(h)))
        ax.loglog(h, c * h ** rec.order, "--", label=f"slope {rec.order:.2f}")
    ax.set_xlabel("h")
    ax.set_ylabel("max residual")
    ax.set_title(rec.name, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_report(report: VerificationReport, out_dir, formats=("json", "csv")) -> list[Path]:
    """Write the requested formats into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    written = []
    stem = report.suite
    try:
        if "json" in formats:
            p = out / f"{stem}.json"
            p.write_text(to_json(report))
            written.append(p)
        if "csv" in formats:
            p = out / f"{stem}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(CSV_HEADER)
                w.writerows(csv_rows(report))
            written.append(p)
        if "svg" in formats:
            for i, rec in enumerate(report.records):
                if len(rec.levels) >= 2 and rec.h:
                    p = out / f"{stem}_{i:02d}_{_slug(rec.name)}.svg"
                    plot_record(rec, p)
                    written.append(p)
    except OSError as exc:
        raise OSError(f"failed writing report into {out}: {exc}") from exc
    return written


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name).strip("_")[:48]
