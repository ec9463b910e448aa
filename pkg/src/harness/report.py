# src/harness/report.py

import io
import json
import logging
from dataclasses import dataclass, field, asdict
import pandas as pd

from src.utils.errors import ArgumentError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["experiment", "params", "statistic", "value", "stderr", "n"]
BUILD_ID = "parapde-0.1.0"


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    params: str
    statistic: str
    value: float
    stderr: float = 0.0
    n: int = 1

    def key(self):
        return (self.experiment, self.params, self.statistic)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def add(self, experiment, params, statistic, value, stderr=0.0, n=1):
        self.rows.append(ReportRow(experiment, format_params(params), statistic, float(value), float(stderr), int(n)))

    def check(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self):
        return not self.failures

    def sorted_rows(self):
        return sorted(self.rows, key=ReportRow.key)

    def extend(self, other):
        self.rows.extend(other.rows)
        self.checks.extend(other.checks)

    def to_frame(self):
        return pd.DataFrame([asdict(r) for r in self.sorted_rows()], columns=CSV_COLUMNS)


def format_params(params):
    """Canonical "key=value;..." string with sorted keys."""
    if isinstance(params, str):
        return params
    return ";".join(f"{k}={_format_value(params[k])}" for k in sorted(params))


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_format_value(x) for x in v) + "]"
    return str(v)


def emit_report(report, fmt="csv"):
    """
    Serialize a report.

    Args:
        report (ExperimentReport): Report to write
        fmt (str): "csv" (rows only, fixed header) or "json" ({"metadata", "rows"})

    Returns:
        bytes
    """
    rows = report.sorted_rows()
    if fmt == "csv":
        frame = pd.DataFrame([[r.experiment, r.params, r.statistic, repr(r.value), repr(r.stderr), str(r.n)]
                              for r in rows], columns=CSV_COLUMNS)
        buf = io.StringIO()
        frame.to_csv(buf, index=False, lineterminator="\n")
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        metadata = dict(report.metadata)
        metadata["checks"] = [asdict(c) for c in report.checks]
        payload = {"metadata": metadata, "rows": [asdict(r) for r in rows]}
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise ArgumentError(f"Unknown report format {fmt!r}")


def parse_report(data, fmt="csv"):
    """Inverse of emit_report; metadata is only recovered from JSON."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    report = ExperimentReport()
    if fmt == "csv":
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
        if list(frame.columns) != CSV_COLUMNS:
            raise ArgumentError(f"Unexpected report header {list(frame.columns)}")
        for rec in frame.itertuples(index=False):
            report.rows.append(ReportRow(rec.experiment, rec.params, rec.statistic, float(rec.value),
                                         float(rec.stderr), int(rec.n)))
        return report
    if fmt == "json":
        payload = json.loads(text)
        report.metadata = dict(payload.get("metadata", {}))
        checks = report.metadata.pop("checks", [])
        report.checks = [Check(**c) for c in checks]
        report.rows = [ReportRow(**r) for r in payload.get("rows", [])]
        return report
    raise ArgumentError(f"Unknown report format {fmt!r}")
