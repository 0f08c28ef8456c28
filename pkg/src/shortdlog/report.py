"""Experiment reports and their json / csv / text serializations.

Timing data lives under ``timings`` only, so two runs with the same seed
produce identical documents once that key is dropped.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

TRIAL_FIELDS = (
    "index", "seed", "m", "s", "ell", "samples", "rounds", "good_pairs",
    "subsets_tried", "success", "recovered",
)


@dataclass
class ExperimentReport:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    trials: list[dict[str, Any]] = field(default_factory=list)
    aggregates: dict[str, Any] = field(default_factory=dict)
    checks: list[dict[str, Any]] = field(default_factory=list)
    timings: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks if c.get("required", True))


def compute_aggregates(trials: list[dict[str, Any]]) -> dict[str, Any]:
    n = len(trials)
    successes = sum(1 for t in trials if t["success"])
    rate = successes / n if n else 0.0
    agg: dict[str, Any] = {
        "trials": n,
        "successes": successes,
        "success_rate": rate,
        "success_rate_se": math.sqrt(rate * (1 - rate) / n) if n else 0.0,
    }
    for key in ("samples", "rounds", "good_pairs", "subsets_tried"):
        agg[f"mean_{key}"] = sum(t[key] for t in trials) / n if n else 0.0
    return agg


def _jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return list(value)
    return value


def emit_report(report: ExperimentReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        extra = sorted({k for t in report.trials for k in t} - set(TRIAL_FIELDS))
        writer = csv.DictWriter(buf, fieldnames=list(TRIAL_FIELDS) + extra, lineterminator="\n")
        writer.writeheader()
        for t in report.trials:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, tuple, dict)) else v for k, v in t.items()})
        return buf.getvalue()
    if fmt == "text":
        lines = [f"command: {report.command}"]
        lines += [f"  {k} = {v}" for k, v in sorted(report.params.items())]
        if report.aggregates:
            lines.append("aggregates:")
            lines += [f"  {k} = {v}" for k, v in sorted(report.aggregates.items())]
        if report.checks:
            lines.append("checks:")
            for c in report.checks:
                status = "PASS" if c["passed"] else ("FAIL" if c.get("required", True) else "info")
                lines.append(f"  [{status}] {c['name']}: measured={c['measured']} bound={c['bound']} {c['detail']}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_report(text: str) -> ExperimentReport:
    return ExperimentReport(**json.loads(text))
