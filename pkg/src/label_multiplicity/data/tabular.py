"""
CSV ingestion driven by a declarative schema.

Classes
-------
TabularSchema : Which column is the target, how binary targets map to ±1,
    which columns are categorical.

Functions
---------
load_schema : Read a TabularSchema from JSON.
load_csv : Read a CSV file into a Dataset.
write_csv : Write a Dataset back to CSV.
align_columns : Match a second file's columns to the first.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from label_multiplicity.certify.errors import (
    ConfigError,
    EmptyDataset,
    ParseError,
    SchemaMismatch,
)
from label_multiplicity.certify.types import Dataset, LabelKind

logger = logging.getLogger(__name__)

# Data row i (0-based) sits on file line i + 2 below the header.
_FIRST_DATA_LINE = 2


@dataclass(frozen=True)
class TabularSchema:
    """
    How to turn a CSV file into a Dataset.

    Attributes
    ----------
    target : str
        Label column.
    columns : tuple of str
        Expected header, in order; empty accepts any header containing
        the target and the categorical columns.
    positive : tuple of str
        Raw target values mapped to +1.  With ``negative`` this makes
        the task binary.
    negative : tuple of str
        Raw target values mapped to −1.
    categorical : tuple of str
        Columns one-hot encoded with the first category dropped.
    drop : tuple of str
        Columns ignored entirely.
    """

    target: str
    columns: tuple[str, ...] = ()
    positive: tuple[str, ...] = ()
    negative: tuple[str, ...] = ()
    categorical: tuple[str, ...] = ()
    drop: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if bool(self.positive) != bool(self.negative):
            raise ConfigError("binary label mapping needs both 'positive' and 'negative'")
        overlap = set(self.positive) & set(self.negative)
        if overlap:
            raise ConfigError(f"values mapped to both classes: {sorted(overlap)}")
        if self.columns and self.target not in self.columns:
            raise ConfigError(f"target {self.target!r} not among declared columns")

    @property
    def label_kind(self) -> LabelKind:
        return LabelKind.BINARY if self.positive else LabelKind.REGRESSION

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> TabularSchema:
        try:
            target = str(obj["target"])
        except KeyError:
            raise ConfigError("schema needs a 'target' column") from None
        labels = obj.get("labels", {})

        def strings(values: Any) -> tuple[str, ...]:
            if isinstance(values, str):
                return (values,)
            return tuple(str(v) for v in values or ())

        return cls(
            target=target,
            columns=strings(obj.get("columns")),
            positive=strings(labels.get("positive", obj.get("positive"))),
            negative=strings(labels.get("negative", obj.get("negative"))),
            categorical=strings(obj.get("categorical")),
            drop=strings(obj.get("drop")),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"target": self.target}
        if self.columns:
            out["columns"] = list(self.columns)
        if self.positive:
            out["labels"] = {"positive": list(self.positive), "negative": list(self.negative)}
        if self.categorical:
            out["categorical"] = list(self.categorical)
        if self.drop:
            out["drop"] = list(self.drop)
        return out


def load_schema(path: str | Path) -> TabularSchema:
    """Read a schema JSON file."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: schema must be a JSON object")
    return TabularSchema.from_dict(obj)


def _check_header(frame: pd.DataFrame, schema: TabularSchema, path: str) -> None:
    header = tuple(frame.columns)
    if schema.columns and header != schema.columns:
        raise SchemaMismatch(f"{path}: header {list(header)} != schema {list(schema.columns)}")
    required = (schema.target, *schema.categorical, *schema.drop)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaMismatch(f"{path}: missing columns {missing}")


def _numeric(column: pd.Series, path: str) -> np.ndarray:
    values = pd.to_numeric(column.str.strip(), errors="coerce").to_numpy(
        dtype=np.float64, na_value=np.nan
    )
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(
            f"cannot parse {column.iloc[row]!r} as a number",
            path,
            row + _FIRST_DATA_LINE,
            str(column.name),
        )
    return values


def _labels(column: pd.Series, schema: TabularSchema, path: str) -> np.ndarray:
    if schema.label_kind is LabelKind.REGRESSION:
        return _numeric(column, path)
    raw = column.str.strip()
    positive = raw.isin(schema.positive).to_numpy()
    negative = raw.isin(schema.negative).to_numpy()
    unmapped = ~(positive | negative)
    if unmapped.any():
        row = int(np.flatnonzero(unmapped)[0])
        raise SchemaMismatch(
            f"{path}:{row + _FIRST_DATA_LINE} [{schema.target}]: "
            f"label {raw.iloc[row]!r} is not in the binary mapping"
        )
    return np.where(positive, 1.0, -1.0)


def _undecodable_line(path: str | Path) -> int | None:
    raw = Path(path).read_bytes()
    try:
        raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        return raw[: exc.start].count(b"\n") + 1
    return None


def load_csv(path: str | Path, schema: TabularSchema) -> Dataset:
    """
    Read a CSV file with a header row into a Dataset.

    Numeric columns are parsed strictly; categorical columns are one-hot
    encoded with the first category dropped and named ``<column>_<value>``.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV file.
    schema : TabularSchema

    Returns
    -------
    Dataset

    Raises
    ------
    ParseError
        A numeric cell failed to parse; the message names line and column.
        Also raised when the file is not valid UTF-8.
    SchemaMismatch
        Header or target values disagree with the schema.
    EmptyDataset
        No data rows or no feature columns.
    """
    where = str(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise ParseError(str(exc), where) from exc
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataset(f"{where}: file is empty") from exc
    except UnicodeDecodeError as exc:
        raise ParseError("not valid UTF-8", where, _undecodable_line(path)) from exc
    _check_header(frame, schema, where)
    if frame.empty:
        raise EmptyDataset(f"{where}: no data rows")

    labels = _labels(frame[schema.target], schema, where)
    feature_frame = frame.drop(columns=[schema.target, *schema.drop])
    parts: list[pd.DataFrame] = []
    for name in feature_frame.columns:
        column = feature_frame[name]
        if name in schema.categorical:
            parts.append(
                pd.get_dummies(column.str.strip(), prefix=name, drop_first=True, dtype=np.float64)
            )
        else:
            parts.append(pd.DataFrame({name: _numeric(column, where)}))
    if not parts:
        raise EmptyDataset(f"{where}: no feature columns")
    features = pd.concat(parts, axis=1)
    if features.shape[1] == 0:
        raise EmptyDataset(f"{where}: no feature columns after encoding")
    logger.info("loaded %d rows x %d features from %s", features.shape[0], features.shape[1], where)
    return Dataset(
        features.to_numpy(dtype=np.float64),
        labels,
        schema.label_kind,
        tuple(str(c) for c in features.columns),
    )


def write_csv(
    path: str | Path,
    data: Dataset,
    target: str = "target",
    feature_names: Sequence[str] = (),
) -> None:
    """
    Write *data* as CSV with full float precision.

    Reading the file back with ``TabularSchema(target)`` (plus the ±1
    mapping for binary data) reproduces the dataset.
    """
    names = list(feature_names or data.feature_names or (f"x{j}" for j in range(data.d)))
    frame = pd.DataFrame(data.features, columns=names)
    frame[target] = data.labels
    frame.to_csv(path, index=False, float_format="%.17g")


def align_columns(data: Dataset, names: Sequence[str]) -> Dataset:
    """
    Reorder *data*'s named columns to *names*.

    One-hot columns missing from *data* are filled with 0; columns not in
    *names* (categories unseen when *names* was produced) are dropped with
    a warning.
    """
    if tuple(names) == data.feature_names:
        return data
    if not data.feature_names:
        raise SchemaMismatch("cannot align columns of an unnamed dataset")
    index = {name: j for j, name in enumerate(data.feature_names)}
    extra = [name for name in data.feature_names if name not in set(names)]
    if extra:
        logger.warning("dropping columns absent from the training data: %s", extra)
    features = np.zeros((data.n, len(names)))
    for j, name in enumerate(names):
        if name in index:
            features[:, j] = data.features[:, index[name]]
    return data.with_features(features, tuple(names))
