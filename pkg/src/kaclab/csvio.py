"""CSV output with locale-independent, shortest round-trip numbers."""

from __future__ import annotations

import csv
import dataclasses
import math
import numbers
import os
from typing import Iterable, Optional, Sequence


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        # repr is the shortest string that round-trips, and never localized
        return repr(f)
    if v is None:
        return ""
    return str(v)


def _as_dict(row) -> dict:
    if dataclasses.is_dataclass(row):
        return {f.name: getattr(row, f.name) for f in dataclasses.fields(row)}
    return dict(row)


def emit_csv(rows: Iterable, path: str, columns: Optional[Sequence[str]] = None) -> str:
    """Write header plus rows; with no rows and no ``columns`` the file is empty."""
    rows = [_as_dict(r) for r in rows]
    if columns is None:
        columns = list(rows[0]) if rows else []
    d = os.path.dirname(path)
    try:
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if columns:
                w.writerow(columns)
            for r in rows:
                w.writerow([format_value(r.get(c)) for c in columns])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path
