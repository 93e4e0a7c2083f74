"""Tabular experiment reports with deterministic CSV and JSON output."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and callable(v.item):  # numpy scalars
        return _jsonable(v.item())
    return v


@dataclass
class ExperimentReport:
    """Rows of named values plus a free-form ``meta`` mapping."""

    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, **row):
        missing = set(self.columns) - row.keys()
        if missing:
            raise KeyError(f"row lacks columns {sorted(missing)}")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(format_value(r[c]) for c in self.columns) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{c: r[c] for c in self.columns} for r in self.rows]
        return json.dumps(_jsonable({"meta": self.meta, "rows": rows}), indent=2) + "\n"
