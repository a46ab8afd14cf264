"""Versioned JSON reports and the summary CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .export import atomic_write

SCHEMA_VERSION = 1

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "tool_version", "config", "records", "summary", "timestamp"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool_version": {"type": "string"},
        "config": {
            "type": "object",
            "required": ["kind", "domain", "seed"],
            "properties": {"seed": {"type": "integer"}},
        },
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["item", "verdict"],
                "properties": {
                    "item": {"type": "string"},
                    "verdict": {"enum": ["pass", "fail", "vacuous-pass", "not-applicable"]},
                },
            },
        },
        "summary": {
            "type": "object",
            "required": ["pass_count", "fail_count", "vacuous_count"],
            "properties": {
                "pass_count": {"type": "integer", "minimum": 0},
                "fail_count": {"type": "integer", "minimum": 0},
                "vacuous_count": {"type": "integer", "minimum": 0},
            },
        },
        "timestamp": {"type": "object"},
    },
}


def jsonable(obj):
    """Convert numpy/complex/enum values into plain JSON data; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


@dataclass
class Report:
    config: dict
    records: list
    timestamp: dict = field(default_factory=dict)
    tool_version: str = __version__

    @property
    def summary(self) -> dict:
        verdicts = [r["verdict"] for r in self.records]
        return {
            "pass_count": verdicts.count("pass"),
            "fail_count": verdicts.count("fail"),
            "vacuous_count": verdicts.count("vacuous-pass"),
            "not_applicable_count": verdicts.count("not-applicable"),
        }

    @property
    def failed(self) -> bool:
        return self.summary["fail_count"] > 0

    def to_dict(self) -> dict:
        return jsonable({
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
            "timestamp": self.timestamp,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def strip_timestamp(report_json: str) -> str:
    data = json.loads(report_json)
    data.pop("timestamp", None)
    return json.dumps(data, indent=2, sort_keys=True)


def summary_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item", "verdict"])
    for rec in report.records:
        w.writerow([rec["item"], rec["verdict"]])
    return buf.getvalue()


def emit_report(report: Report, out_dir) -> int:
    """Write ``report.json`` and ``summary.csv``; returns 2 if any verdict failed, else 0.

    I/O errors propagate (the CLI maps them to exit code 1).
    """
    out_dir = Path(out_dir)
    atomic_write(out_dir / "report.json", report.to_json())
    atomic_write(out_dir / "summary.csv", summary_csv(report))
    return 2 if report.failed else 0
