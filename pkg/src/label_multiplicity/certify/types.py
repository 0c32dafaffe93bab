"""
Data types for label-multiplicity certification.

Defines the immutable containers passed between the linear-algebra core,
the perturbation model and the two certifiers.  Arrays stored on these
types are copied and marked read-only on construction, so instances are
safe to share across threads.

Classes
-------
LabelKind : Regression or binary (±1) labels.
Direction : Which way a greedy pass pushes the prediction.
VerdictStatus : Outcome of an exact robustness check.
ApproxStatus : Outcome of an interval robustness check.
Dataset : Feature matrix plus label vector.
Interval : Closed real interval ``[lo, hi]``.
IntervalVector : Box of intervals, stored as two arrays.
RidgeModel : Fitted ridge weights.
InfluenceVector : One test point's linear functional over training labels.
CoefficientMap : The ``d × n`` matrix ``(XᵀX+λI)⁻¹Xᵀ``.
FeatureCondition : One comparison on a feature column.
BiasRule : Conjunctive eligibility predicate plus a delta template.
MultiplicitySpec : Materialized budget, per-sample deltas and eligibility.
PerturbationWitness : A concrete feasible label perturbation.
PredictionRange : Exact attainable prediction interval with witnesses.
Verdict : Robust / NotRobust with an optional counterexample.
ThetaBox : Per-coordinate interval enclosure of all attainable weights.
EnumerationBudget : Guard on brute-force enumeration size.
"""

from __future__ import annotations

import math
import operator
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from label_multiplicity.certify.errors import (
    DimensionMismatch,
    EmptyDataset,
    InvalidInterval,
    InvalidRule,
    InvalidSpec,
    NotBinary,
)

FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]


def _readonly(values: ArrayLike, dtype: Any = np.float64) -> NDArray[Any]:
    """Return a read-only copy of *values* with the given dtype."""
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------


class LabelKind(str, Enum):
    """Kind of training labels."""

    REGRESSION = "regression"
    BINARY = "binary"


class Direction(str, Enum):
    """Greedy direction: increase or decrease ``z·y``."""

    UP = "up"
    DOWN = "down"


class VerdictStatus(str, Enum):
    """Outcome of the exact certifier."""

    ROBUST = "Robust"
    NOT_ROBUST = "NotRobust"


class ApproxStatus(str, Enum):
    """Outcome of the interval certifier; it never refutes robustness."""

    ROBUST = "Robust"
    UNKNOWN = "Unknown"


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """
    Training or test data.

    Attributes
    ----------
    features : ndarray of shape (n, d)
        Dense real feature matrix.
    labels : ndarray of shape (n,)
        Real labels; exactly ``-1`` or ``+1`` when binary.
    label_kind : LabelKind
        Regression or binary.
    feature_names : tuple of str
        Optional column names, one per feature (empty when unnamed).
    """

    features: FloatArray
    labels: FloatArray
    label_kind: LabelKind = LabelKind.REGRESSION
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        features = _readonly(self.features)
        labels = _readonly(self.labels)
        if features.ndim != 2:
            raise DimensionMismatch(
                f"features must be 2-D, got shape {features.shape}"
            )
        n, d = features.shape
        if n < 1 or d < 1:
            raise EmptyDataset(f"dataset needs n >= 1 and d >= 1, got {n}x{d}")
        if labels.ndim != 1 or labels.shape[0] != n:
            raise DimensionMismatch(
                f"labels shape {labels.shape} does not match {n} feature rows"
            )
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(labels))):
            raise ValueError("dataset contains non-finite values")
        kind = LabelKind(self.label_kind)
        if kind is LabelKind.BINARY and not np.all(np.isin(labels, (-1.0, 1.0))):
            raise NotBinary("binary labels must be exactly -1 or +1")
        names = tuple(self.feature_names)
        if names and len(names) != d:
            raise DimensionMismatch(f"{len(names)} feature names for {d} columns")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_kind", kind)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        """Number of samples."""
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        """Number of features."""
        return int(self.features.shape[1])

    def subset(self, indices: ArrayLike) -> Dataset:
        """Return the rows at *indices* as a new dataset."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.label_kind,
            self.feature_names,
        )

    def with_features(
        self, features: ArrayLike, feature_names: Sequence[str] = ()
    ) -> Dataset:
        """Return a dataset with the same labels and new feature columns."""
        return Dataset(features, self.labels, self.label_kind, tuple(feature_names))

    def column_index(self, feature: int | str) -> int:
        """Resolve a column given by position or by name."""
        if isinstance(feature, str):
            try:
                return self.feature_names.index(feature)
            except ValueError:
                raise DimensionMismatch(f"unknown feature column {feature!r}") from None
        index = int(feature)
        if not 0 <= index < self.d:
            raise DimensionMismatch(f"feature index {index} out of range for d={self.d}")
        return index


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """
    Closed interval ``[lo, hi]`` with ``lo <= hi``.

    Attributes
    ----------
    lo : float
        Lower endpoint.
    hi : float
        Upper endpoint.
    """

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise InvalidInterval(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value: float) -> Interval:
        """Degenerate interval ``[value, value]``."""
        return cls(value, value)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float, tol: float = 0.0) -> bool:
        """Whether ``lo - tol <= value <= hi + tol``."""
        return self.lo - tol <= value <= self.hi + tol

    def issubset(self, other: Interval, tol: float = 0.0) -> bool:
        """Whether this interval lies inside *other* (with slack *tol*)."""
        return other.lo - tol <= self.lo and self.hi <= other.hi + tol

    def to_list(self) -> list[float]:
        return [self.lo, self.hi]


@dataclass(frozen=True)
class IntervalVector:
    """
    A box: one interval per coordinate, stored as two arrays.

    Attributes
    ----------
    lo : ndarray of shape (m,)
        Lower endpoints.
    hi : ndarray of shape (m,)
        Upper endpoints.
    """

    lo: FloatArray
    hi: FloatArray

    def __post_init__(self) -> None:
        lo = _readonly(self.lo)
        hi = _readonly(self.hi)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise DimensionMismatch(
                f"interval bounds must be equal-length vectors, got {lo.shape} and {hi.shape}"
            )
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            bad = int(np.flatnonzero(~(lo <= hi))[0])
            raise InvalidInterval(f"invalid interval at {bad}: [{lo[bad]}, {hi[bad]}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_intervals(cls, intervals: Sequence[Interval]) -> IntervalVector:
        return cls(
            np.array([iv.lo for iv in intervals], dtype=np.float64),
            np.array([iv.hi for iv in intervals], dtype=np.float64),
        )

    @classmethod
    def degenerate(cls, values: ArrayLike) -> IntervalVector:
        """Box whose every coordinate is the single point ``values[i]``."""
        arr = np.asarray(values, dtype=np.float64)
        return cls(arr, arr)

    @classmethod
    def filled(cls, size: int, interval: Interval) -> IntervalVector:
        return cls(np.full(size, interval.lo), np.full(size, interval.hi))

    def __len__(self) -> int:
        return int(self.lo.shape[0])

    def __getitem__(self, index: int) -> Interval:
        return Interval(float(self.lo[index]), float(self.hi[index]))

    @property
    def widths(self) -> FloatArray:
        return self.hi - self.lo

    def contains_point(self, point: ArrayLike, tol: float = 0.0) -> bool:
        """Whether every coordinate of *point* lies in its interval."""
        p = np.asarray(point, dtype=np.float64)
        if p.shape != self.lo.shape:
            raise DimensionMismatch(f"point shape {p.shape} vs box {self.lo.shape}")
        return bool(np.all(self.lo - tol <= p) and np.all(p <= self.hi + tol))

    def to_dict(self) -> dict[str, list[float]]:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


# ---------------------------------------------------------------------------
# Linear algebra results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RidgeModel:
    """
    Ridge regression weights.

    Attributes
    ----------
    theta : ndarray of shape (d,)
        Solution of ``(XᵀX + λI)θ = Xᵀy``.
    lam : float
        Regularization strength λ ≥ 0.
    """

    theta: FloatArray
    lam: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", _readonly(self.theta))
        object.__setattr__(self, "lam", float(self.lam))

    def predict(self, points: ArrayLike) -> FloatArray:
        """Predictions ``θᵀx`` for one point or a matrix of points."""
        return np.asarray(points, dtype=np.float64) @ self.theta


@dataclass(frozen=True)
class InfluenceVector:
    """
    Prediction of one test point as a linear functional of the labels.

    Attributes
    ----------
    z : ndarray of shape (n,)
        ``xᵀ(XᵀX+λI)⁻¹Xᵀ``; one weight per training label.
    base_prediction : float
        ``z·y`` on the unmodified labels.
    """

    z: FloatArray
    base_prediction: float

    def __post_init__(self) -> None:
        z = _readonly(self.z)
        if z.ndim != 1:
            raise DimensionMismatch(f"influence vector must be 1-D, got {z.shape}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "base_prediction", float(self.base_prediction))

    @classmethod
    def from_labels(cls, z: ArrayLike, labels: ArrayLike) -> InfluenceVector:
        zv = np.asarray(z, dtype=np.float64)
        return cls(zv, float(zv @ np.asarray(labels, dtype=np.float64)))

    def __len__(self) -> int:
        return int(self.z.shape[0])


@dataclass(frozen=True)
class CoefficientMap:
    """
    The matrix ``C = (XᵀX+λI)⁻¹Xᵀ``.

    Row ``i`` is the influence functional of weight ``θ_i``.

    Attributes
    ----------
    c : ndarray of shape (d, n)
    """

    c: FloatArray

    def __post_init__(self) -> None:
        c = _readonly(self.c)
        if c.ndim != 2:
            raise DimensionMismatch(f"coefficient map must be 2-D, got {c.shape}")
        object.__setattr__(self, "c", c)

    @property
    def d(self) -> int:
        return int(self.c.shape[0])

    @property
    def n(self) -> int:
        return int(self.c.shape[1])

    def row(self, index: int, labels: ArrayLike) -> InfluenceVector:
        """Influence functional of coordinate *index* against *labels*."""
        return InfluenceVector.from_labels(self.c[index], labels)

    def apply(self, labels: ArrayLike) -> FloatArray:
        """Weights ``C·y`` obtained from training on *labels*."""
        y = np.asarray(labels, dtype=np.float64)
        if y.shape != (self.n,):
            raise DimensionMismatch(f"labels shape {y.shape}, expected ({self.n},)")
        return self.c @ y


# ---------------------------------------------------------------------------
# Perturbation model
# ---------------------------------------------------------------------------

_COMPARATORS: dict[str, Callable[[Any, Any], Any]] = {
    "=": operator.eq,
    "==": operator.eq,
    "!=": operator.ne,
    "≠": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    "≤": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "≥": operator.ge,
}


@dataclass(frozen=True)
class FeatureCondition:
    """
    A single comparison ``features[:, feature] <op> threshold``.

    Attributes
    ----------
    feature : int or str
        Column position, or column name when the dataset is named.
    op : str
        One of ``= == != ≠ < <= ≤ > >= ≥``.
    threshold : float
    """

    feature: int | str
    op: str
    threshold: float

    def __post_init__(self) -> None:
        if self.op not in _COMPARATORS:
            raise InvalidRule(f"unknown comparison {self.op!r}")
        object.__setattr__(self, "threshold", float(self.threshold))

    def evaluate(self, data: Dataset) -> BoolArray:
        """Boolean mask of rows satisfying the comparison."""
        column = data.features[:, data.column_index(self.feature)]
        return np.asarray(_COMPARATORS[self.op](column, self.threshold), dtype=bool)


def conditions_mask(conditions: Sequence[FeatureCondition], data: Dataset) -> BoolArray:
    """Conjunction of *conditions* over the rows of *data* (all true when empty)."""
    mask = np.ones(data.n, dtype=bool)
    for condition in conditions:
        mask &= condition.evaluate(data)
    return mask


@dataclass(frozen=True)
class BiasRule:
    """
    One clause of the eligibility predicate φ with its delta template.

    Attributes
    ----------
    feature_conditions : tuple of FeatureCondition
        Joined conjunctively; empty matches every sample.
    delta_template : Interval
        Allowed label change for matching samples; must contain 0.
    label_condition : float or None
        When set, the rule only matches samples with this label.
    """

    feature_conditions: tuple[FeatureCondition, ...]
    delta_template: Interval
    label_condition: float | None = None

    def __post_init__(self) -> None:
        if not self.delta_template.contains(0.0):
            raise InvalidRule(
                f"delta template {self.delta_template.to_list()} must contain 0"
            )
        object.__setattr__(self, "feature_conditions", tuple(self.feature_conditions))

    def matches(self, data: Dataset) -> BoolArray:
        """Boolean mask of samples this rule applies to."""
        mask = conditions_mask(self.feature_conditions, data)
        if self.label_condition is not None:
            mask &= data.labels == float(self.label_condition)
        return mask


@dataclass(frozen=True)
class MultiplicitySpec:
    """
    The perturbation set: at most ``k`` eligible labels changed within Δ.

    Attributes
    ----------
    k : int
        Maximum number of labels changed, ``0 <= k <= n``.
    delta : IntervalVector
        Per-sample allowed change ``[δˡ, δᵘ]`` with ``δˡ <= 0 <= δᵘ``.
    eligible : ndarray of bool, shape (n,)
        Materialized φ.
    """

    k: int
    delta: IntervalVector
    eligible: BoolArray

    def __post_init__(self) -> None:
        eligible = _readonly(self.eligible, dtype=bool)
        n = len(self.delta)
        if eligible.shape != (n,):
            raise DimensionMismatch(
                f"eligibility mask shape {eligible.shape} vs {n} delta intervals"
            )
        if np.any(self.delta.lo > 0) or np.any(self.delta.hi < 0):
            raise InvalidSpec("every delta interval must contain 0")
        k = int(self.k)
        if k != self.k or not 0 <= k <= n:
            raise InvalidSpec(f"budget k={self.k} must be an integer in [0, {n}]")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "eligible", eligible)

    @property
    def n(self) -> int:
        return len(self.delta)

    @property
    def eligible_count(self) -> int:
        return int(np.count_nonzero(self.eligible))

    def with_budget(self, k: int) -> MultiplicitySpec:
        """Same deltas and eligibility under a different budget."""
        return MultiplicitySpec(k, self.delta, self.eligible)

    def scaled(self, factor: float) -> MultiplicitySpec:
        """Every delta interval multiplied by a positive *factor*."""
        if not factor > 0:
            raise InvalidSpec(f"scale factor must be positive, got {factor}")
        return MultiplicitySpec(
            self.k,
            IntervalVector(self.delta.lo * factor, self.delta.hi * factor),
            self.eligible,
        )


@dataclass(frozen=True)
class PerturbationWitness:
    """
    A concrete label perturbation.

    Attributes
    ----------
    changed : tuple of (int, float)
        ``(sample index, applied delta)`` pairs.
    resulting_labels : ndarray of shape (n,)
        Labels after applying the changes.
    """

    changed: tuple[tuple[int, float], ...]
    resulting_labels: FloatArray

    def __post_init__(self) -> None:
        changed = tuple((int(i), float(v)) for i, v in self.changed)
        object.__setattr__(self, "changed", changed)
        object.__setattr__(self, "resulting_labels", _readonly(self.resulting_labels))

    @classmethod
    def unchanged(cls, labels: ArrayLike) -> PerturbationWitness:
        return cls((), np.asarray(labels, dtype=np.float64))

    @property
    def size(self) -> int:
        return len(self.changed)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.changed)

    def summary(self, limit: int = 10) -> dict[str, Any]:
        """Compact description for reports."""
        return {
            "size": self.size,
            "changed": [[i, v] for i, v in self.changed[:limit]],
            "truncated": self.size > limit,
        }


# ---------------------------------------------------------------------------
# Certification results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionRange:
    """
    Exact attainable predictions for one test point.

    Attributes
    ----------
    range : Interval
        ``[min, max]`` of ``z·y'`` over the feasible set.
    lower_witness : PerturbationWitness
        Labels attaining ``range.lo``.
    upper_witness : PerturbationWitness
        Labels attaining ``range.hi``.
    base : float
        Prediction on the unmodified labels.
    label_kind : LabelKind
        Kind of the training labels (classification needs binary).
    """

    range: Interval
    lower_witness: PerturbationWitness
    upper_witness: PerturbationWitness
    base: float
    label_kind: LabelKind = LabelKind.REGRESSION

    def __post_init__(self) -> None:
        if not self.range.contains(self.base):
            raise InvalidInterval(
                f"base {self.base} outside range {self.range.to_list()}"
            )


@dataclass(frozen=True)
class Verdict:
    """
    Exact robustness outcome.

    Attributes
    ----------
    status : VerdictStatus
    counterexample : PerturbationWitness or None
        Present iff the status is NotRobust.
    """

    status: VerdictStatus
    counterexample: PerturbationWitness | None = None

    def __post_init__(self) -> None:
        if (self.status is VerdictStatus.NOT_ROBUST) != (self.counterexample is not None):
            raise ValueError("a counterexample is required exactly for NotRobust")

    @property
    def robust(self) -> bool:
        return self.status is VerdictStatus.ROBUST


@dataclass(frozen=True)
class ThetaBox:
    """
    Tightest hyperrectangle around every attainable weight vector.

    Attributes
    ----------
    coords : IntervalVector
        One interval per weight coordinate.
    base_theta : ndarray of shape (d,)
        Weights on the unmodified labels.
    """

    coords: IntervalVector
    base_theta: FloatArray

    def __post_init__(self) -> None:
        base = _readonly(self.base_theta)
        if base.shape != (len(self.coords),):
            raise DimensionMismatch(
                f"base theta shape {base.shape} vs {len(self.coords)} coordinates"
            )
        if not self.coords.contains_point(base):
            raise InvalidInterval("base theta lies outside the box")
        object.__setattr__(self, "base_theta", base)

    @property
    def d(self) -> int:
        return len(self.coords)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lo": self.coords.lo.tolist(),
            "hi": self.coords.hi.tolist(),
            "base_theta": self.base_theta.tolist(),
        }


@dataclass(frozen=True)
class EnumerationBudget:
    """
    Size guard for the brute-force oracle.

    Attributes
    ----------
    max_n : int
        Largest training set the oracle accepts.
    max_k : int
        Largest budget the oracle accepts.
    max_evaluations : int
        Cap on enumerated label vectors (subsets × endpoint assignments).
    """

    max_n: int = 12
    max_k: int = 3
    max_evaluations: int = 200_000
