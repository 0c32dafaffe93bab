"""
JSON and CSV writers for reports and curves.

JSON output is deterministic: keys sorted, two-space indent, a trailing
newline, non-finite floats written as ``null``.

Functions
---------
to_jsonable : Convert dataclasses, enums and numpy values to JSON types.
dumps_json : Deterministic JSON text.
write_json : Write deterministic JSON to a file.
write_rows_csv : Write a list of flat records as CSV.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Mapping, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd


def to_jsonable(obj: Any) -> Any:
    """
    Recursively convert *obj* into plain JSON-compatible values.

    Objects with a ``to_dict`` method are converted through it.
    """
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    return str(obj)


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    """Write *obj* as deterministic JSON, creating parent directories."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps_json(obj), encoding="utf-8")


def write_rows_csv(
    path: str | Path,
    rows: Sequence[Mapping[str, Any]],
    columns: Sequence[str] | None = None,
) -> None:
    """
    Write flat records as CSV with a header row.

    Parameters
    ----------
    path : str or Path
    rows : sequence of mapping
        One record per line; nested values are JSON-encoded.
    columns : sequence of str, optional
        Column order; defaults to first-seen key order.
    """
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    flat = [
        {
            k: json.dumps(to_jsonable(v), sort_keys=True)
            if isinstance(v, (Mapping, list, tuple))
            else to_jsonable(v)
            for k, v in row.items()
        }
        for row in rows
    ]
    frame = pd.DataFrame(flat, columns=list(columns) if columns is not None else None)
    frame.to_csv(p, index=False, float_format="%.17g", lineterminator="\n")
