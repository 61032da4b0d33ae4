"""CSV and JSON serialisation of experiment reports.

CSV holds only the rows, columns in the report's declared order.  JSON
holds ``experiment``, ``config``, ``seeds``, ``columns``, ``rows`` and
``summary``.  Rows are sorted by the report's key columns; ``None`` is an
empty CSV cell and JSON ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .experiments import ExperimentReport


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _cell(v) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.sorted_rows():
        w.writerow([_cell(row[c]) for c in report.columns])
    return buf.getvalue()


def report_to_json(report: ExperimentReport) -> str:
    doc = {
        "experiment": report.name,
        "config": _plain(report.config),
        "seeds": _plain(list(report.seeds)),
        "columns": list(report.columns),
        "rows": [{c: _plain(row[c]) for c in report.columns} for row in report.sorted_rows()],
        "summary": _plain(report.summary),
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def emit_report(report: ExperimentReport, format: str, path) -> None:
    if format == "csv":
        text = report_to_csv(report)
    elif format == "json":
        text = report_to_json(report)
    else:
        raise ValueError(f"unknown format {format!r}")
    Path(path).write_text(text, encoding="utf-8")


def read_csv_rows(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
