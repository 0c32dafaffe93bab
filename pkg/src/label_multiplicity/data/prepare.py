"""
Feature preparation and seeded partitioning.

Standardization statistics come from the training set only and are
recorded, so applying them to a second set never re-estimates anything.

Classes
-------
StandardizationParams : Recorded affine map and kept columns.
SplitPlan : Seed plus split fractions or fold count.
Partitions : Disjoint train / validation / test index sets.

Functions
---------
standardize : Fit the map on train, apply it to train and others.
apply_standardization : Apply a recorded map.
add_intercept : Append an all-ones column.
split : One seeded partition of a dataset.
fold_indices : Seeded K-fold index sets.
rotate_folds : Every (train, validation, test) rotation of K folds.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from label_multiplicity.certify.errors import ConfigError, DimensionMismatch, EmptyDataset
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import Dataset, FloatArray

logger = logging.getLogger(__name__)

IndexArray = NDArray[np.intp]

# Columns whose training standard deviation is below this are constant.
_CONSTANT_STD = 1e-12


@dataclass(frozen=True)
class StandardizationParams:
    """
    Column-wise ``(x − mean) / scale`` over the kept columns.

    Attributes
    ----------
    kept : tuple of int
        Input column positions that survive (constant columns dropped).
    mean : ndarray
        Training mean of each kept column.
    scale : ndarray
        Training standard deviation of each kept column.
    input_width : int
        Column count the map expects.
    """

    kept: tuple[int, ...]
    mean: FloatArray
    scale: FloatArray
    input_width: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "kept": list(self.kept),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "input_width": self.input_width,
        }


def apply_standardization(data: Dataset, params: StandardizationParams) -> Dataset:
    """Apply a recorded map; labels are untouched."""
    if data.d != params.input_width:
        raise DimensionMismatch(f"dataset has {data.d} columns, params expect {params.input_width}")
    kept = list(params.kept)
    features = (data.features[:, kept] - params.mean) / params.scale
    names = tuple(data.feature_names[j] for j in kept) if data.feature_names else ()
    return data.with_features(features, names)


def standardize(
    train: Dataset, others: Sequence[Dataset] = ()
) -> tuple[Dataset, list[Dataset], StandardizationParams]:
    """
    Center and scale columns using training statistics.

    Constant training columns are dropped from every set with a warning.

    Returns
    -------
    (Dataset, list of Dataset, StandardizationParams)
        Standardized train, standardized *others* in order, the map.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    constant = std < _CONSTANT_STD
    if constant.any():
        dropped = np.flatnonzero(constant).tolist()
        labels = [train.feature_names[j] for j in dropped] if train.feature_names else dropped
        logger.warning("dropping %d constant column(s): %s", len(dropped), labels)
    kept = np.flatnonzero(~constant)
    if kept.size == 0:
        raise EmptyDataset("every feature column is constant on the training set")
    params = StandardizationParams(
        tuple(int(j) for j in kept), mean[kept], std[kept], train.d
    )
    return (
        apply_standardization(train, params),
        [apply_standardization(other, params) for other in others],
        params,
    )


def add_intercept(data: Dataset, name: str = "intercept") -> Dataset:
    """Append an all-ones column."""
    features = np.hstack([data.features, np.ones((data.n, 1))])
    names = (*data.feature_names, name) if data.feature_names else ()
    return data.with_features(features, names)


@dataclass(frozen=True)
class SplitPlan:
    """
    How to partition a dataset.

    Attributes
    ----------
    seed : int
        64-bit seed of the row permutation.
    train, validation, test : float
        Fractions summing to 1; used when ``folds`` is None.
    folds : int or None
        K for K-fold rotation.
    """

    seed: int = 0
    train: float = 0.8
    validation: float = 0.1
    test: float = 0.1
    folds: int | None = None
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self) -> None:
        fractions = (self.train, self.validation, self.test)
        if any(f < 0 for f in fractions):
            raise ConfigError(f"split fractions must be nonnegative, got {fractions}")
        if abs(sum(fractions) - 1.0) > self.tolerances.fraction_sum:
            raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")
        if self.folds is not None and self.folds < 2:
            raise ConfigError(f"fold count must be >= 2, got {self.folds}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> SplitPlan:
        folds = obj.get("folds")
        return cls(
            seed=int(obj.get("seed", 0)),
            train=float(obj.get("train", 0.8)),
            validation=float(obj.get("validation", 0.1)),
            test=float(obj.get("test", 0.1)),
            folds=None if folds is None else int(folds),
        )


@dataclass(frozen=True)
class Partitions:
    """Disjoint index sets covering ``range(n)``."""

    train: IndexArray
    validation: IndexArray
    test: IndexArray

    def take(self, data: Dataset) -> tuple[Dataset, Dataset | None, Dataset]:
        """Materialize the three sets; validation is None when empty."""
        validation = data.subset(self.validation) if self.validation.size else None
        return data.subset(self.train), validation, data.subset(self.test)


def _permutation(n: int, seed: int) -> IndexArray:
    return np.random.default_rng(seed).permutation(n).astype(np.intp)


def fold_indices(n: int, plan: SplitPlan) -> list[IndexArray]:
    """K disjoint folds of a seeded permutation; sizes differ by at most one."""
    if plan.folds is None:
        raise ConfigError("fold_indices needs a plan with 'folds'")
    return [np.sort(f) for f in np.array_split(_permutation(n, plan.seed), plan.folds)]


def _rotation(folds: list[IndexArray], i: int) -> Partitions:
    count = len(folds)
    test = folds[i % count]
    validation = folds[(i + 1) % count] if count > 2 else np.empty(0, dtype=np.intp)
    used = {i % count, (i + 1) % count} if count > 2 else {i % count}
    train = np.sort(np.concatenate([f for j, f in enumerate(folds) if j not in used]))
    return Partitions(train, validation, test)


def split(data: Dataset, plan: SplitPlan) -> Partitions:
    """
    One deterministic partition.

    With ``folds`` set this is the first fold rotation; otherwise the
    permuted rows are cut by the plan's fractions (test and validation
    get ``floor(fraction · n)`` rows, train the rest).
    """
    if plan.folds is not None:
        return _rotation(fold_indices(data.n, plan), 0)
    order = _permutation(data.n, plan.seed)
    n_test = int(np.floor(plan.test * data.n))
    n_val = int(np.floor(plan.validation * data.n))
    test = np.sort(order[:n_test])
    validation = np.sort(order[n_test : n_test + n_val])
    train = np.sort(order[n_test + n_val :])
    return Partitions(train, validation, test)


def rotate_folds(data: Dataset, plan: SplitPlan) -> Iterator[Partitions]:
    """
    Yield K rotations: fold ``i`` tests, fold ``i+1`` validates, the rest train.

    With two folds there is no validation set.
    """
    folds = fold_indices(data.n, plan)
    for i in range(len(folds)):
        yield _rotation(folds, i)
