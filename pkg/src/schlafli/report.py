"""Verification rows and their byte-stable JSON / CSV serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, replace

COLUMNS = ("task", "object", "quantity", "computed", "oracle", "residual", "tolerance",
           "error_budget", "passed", "seed")


@dataclass(frozen=True)
class Row:
    task: str
    object: str
    quantity: str
    computed: float
    oracle: float
    residual: float
    tolerance: float
    error_budget: float = 0.0
    seed: int | None = None

    @property
    def passed(self) -> bool:
        r = self.residual
        return (not math.isnan(r)) and abs(r) <= self.tolerance + self.error_budget

    def with_task(self, task: str) -> "Row":
        return replace(self, task=task)


def check(obj: str, quantity: str, computed, oracle, tolerance, error_budget=0.0, seed=None,
          relative_to=None) -> Row:
    """Row for |computed - oracle| <= tolerance (times 1 + |relative_to| if given)."""
    computed, oracle = float(computed), float(oracle)
    tol = float(tolerance)
    if relative_to is not None:
        tol *= 1.0 + abs(float(relative_to))
    return Row("", obj, quantity, computed, oracle, computed - oracle, tol, float(error_budget), seed)


def at_least(obj: str, quantity: str, computed, bound, slack=0.0, seed=None) -> Row:
    """Row for computed >= bound - slack; the residual is the violation (0 when satisfied)."""
    computed, bound = float(computed), float(bound)
    return Row("", obj, quantity, computed, bound, min(0.0, computed - bound), float(slack), 0.0, seed)


def at_most(obj: str, quantity: str, computed, bound, seed=None) -> Row:
    computed, bound = float(computed), float(bound)
    return Row("", obj, quantity, computed, bound, max(0.0, computed - bound), 0.0, 0.0, seed)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _record(row: Row) -> dict:
    d = asdict(row)
    d["passed"] = row.passed
    return {k: d[k] for k in COLUMNS}


def to_json(rows, meta: dict | None = None) -> str:
    recs = []
    for r in rows:
        rec = _record(r)
        recs.append({k: (fmt(v) if isinstance(v, float) else v) for k, v in rec.items()})
    doc = {"schema": 1, **(meta or {}), "all_passed": all(r.passed for r in rows), "rows": recs}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        rec = _record(r)
        w.writerow([fmt(rec[k]) if not isinstance(rec[k], str) else rec[k] for k in COLUMNS])
    return buf.getvalue()


def series_csv(columns, data) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in data:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in rec])
    return buf.getvalue()
