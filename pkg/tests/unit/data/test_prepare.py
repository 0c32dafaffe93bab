import logging

import numpy as np
import pytest

from label_multiplicity.certify.errors import ConfigError, DimensionMismatch
from label_multiplicity.certify.types import Dataset
from label_multiplicity.data.prepare import (
    SplitPlan,
    add_intercept,
    apply_standardization,
    fold_indices,
    rotate_folds,
    split,
    standardize,
)


def _data(n: int = 30, d: int = 3, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(3.0, 2.0, size=(n, d)), rng.normal(size=n))


def test_standardized_train_statistics():
    train, _, params = standardize(_data())
    np.testing.assert_allclose(train.features.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(train.features.std(axis=0), 1.0, atol=1e-9)
    assert params.kept == (0, 1, 2)


def test_others_use_train_statistics():
    train = _data(seed=1)
    other = _data(n=10, seed=2)
    _, (scaled,), params = standardize(train, [other])
    expected = (other.features - train.features.mean(axis=0)) / train.features.std(axis=0)
    np.testing.assert_allclose(scaled.features, expected)
    np.testing.assert_array_equal(scaled.labels, other.labels)


def test_params_are_recorded_not_reestimated():
    train, _, params = standardize(_data(seed=3))
    twice = apply_standardization(train, params)
    assert not np.allclose(twice.features, train.features)


def test_constant_column_dropped(caplog):
    base = _data()
    features = base.features.copy()
    features[:, 1] = 4.0
    data = base.with_features(features, ("a", "b", "c"))
    with caplog.at_level(logging.WARNING, logger="label_multiplicity.data.prepare"):
        train, _, params = standardize(data)
    assert params.kept == (0, 2)
    assert train.feature_names == ("a", "c")
    assert "constant" in caplog.text


def test_apply_checks_width():
    _, _, params = standardize(_data(d=3))
    with pytest.raises(DimensionMismatch):
        apply_standardization(_data(d=2), params)


def test_intercept():
    data = add_intercept(_data(n=4, d=2))
    assert data.d == 3
    np.testing.assert_array_equal(data.features[:, -1], 1.0)


def test_split_is_deterministic_and_exhaustive():
    data = _data(n=50)
    plan = SplitPlan(seed=42)
    first = split(data, plan)
    second = split(data, plan)
    for a, b in zip(
        (first.train, first.validation, first.test),
        (second.train, second.validation, second.test),
        strict=True,
    ):
        np.testing.assert_array_equal(a, b)
    union = np.concatenate([first.train, first.validation, first.test])
    assert sorted(union.tolist()) == list(range(50))
    assert first.test.size == 5 and first.validation.size == 5


def test_different_seed_differs():
    data = _data(n=50)
    first = split(data, SplitPlan(seed=1)).test.tolist()
    assert first != split(data, SplitPlan(seed=2)).test.tolist()


def test_fold_sizes_and_union():
    plan = SplitPlan(seed=7, folds=10)
    folds = fold_indices(103, plan)
    sizes = [f.size for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sorted(np.concatenate(folds).tolist()) == list(range(103))


def test_rotations_are_disjoint():
    data = _data(n=40)
    rotations = list(rotate_folds(data, SplitPlan(seed=0, folds=5)))
    assert len(rotations) == 5
    for parts in rotations:
        sets = [set(parts.train.tolist()), set(parts.validation.tolist()), set(parts.test.tolist())]
        assert sum(len(s) for s in sets) == 40
        assert len(set.union(*sets)) == 40
    tested = np.concatenate([p.test for p in rotations])
    assert sorted(tested.tolist()) == list(range(40))


def test_plan_validation():
    with pytest.raises(ConfigError):
        SplitPlan(train=0.7, validation=0.1, test=0.1)
    with pytest.raises(ConfigError):
        SplitPlan(folds=1)
    with pytest.raises(ConfigError):
        SplitPlan(seed=-1)


def test_take_without_validation():
    data = _data(n=20)
    parts = split(data, SplitPlan(seed=0, train=0.9, validation=0.0, test=0.1))
    train, validation, test = parts.take(data)
    assert validation is None
    assert train.n + test.n == 20
