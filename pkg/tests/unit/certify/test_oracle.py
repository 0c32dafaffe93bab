import logging

import numpy as np
import pytest

from label_multiplicity.certify.errors import BudgetExceeded, NotSquare, Singular
from label_multiplicity.certify.oracle import (
    check_budget,
    describe_members,
    enumerate_feasible_labels,
    evaluation_count,
    oracle_grid_range,
    oracle_prediction_range,
    oracle_search,
    sample_theta,
    theta_membership,
)
from label_multiplicity.certify.types import (
    CoefficientMap,
    EnumerationBudget,
    Interval,
    IntervalVector,
    MultiplicitySpec,
)


def _box_spec(n: int, k: int) -> MultiplicitySpec:
    return MultiplicitySpec(k, IntervalVector.filled(n, Interval(-1.0, 1.0)), np.ones(n, bool))


def test_range_example():
    z = np.array([2.0, -1.0, 3.0])
    assert oracle_prediction_range(z, np.zeros(3), _box_spec(3, 2)) == Interval(-5.0, 5.0)


def test_search_returns_attaining_labels():
    z = np.array([2.0, -1.0, 3.0])
    result = oracle_search(z, np.zeros(3), _box_spec(3, 2))
    assert float(z @ result.upper_labels) == 5.0
    assert float(z @ result.lower_labels) == -5.0
    assert result.evaluations == evaluation_count(3, 2)


def test_evaluation_count():
    assert evaluation_count(3, 2) == 1 + 3 * 2 + 3 * 4
    assert evaluation_count(12, 3) == 1 + 24 + 66 * 4 + 220 * 8
    assert evaluation_count(2, 5) == 1 + 4 + 4


def test_enumeration_starts_unchanged_and_counts():
    y = np.array([0.5, -0.5, 1.0])
    spec = _box_spec(3, 2)
    vectors = list(enumerate_feasible_labels(y, spec))
    np.testing.assert_array_equal(vectors[0], y)
    assert len(vectors) == evaluation_count(3, 2)


def test_budget_guard():
    spec = _box_spec(13, 1)
    with pytest.raises(BudgetExceeded):
        check_budget(spec)
    with pytest.raises(BudgetExceeded):
        check_budget(_box_spec(10, 4))
    with pytest.raises(BudgetExceeded):
        check_budget(_box_spec(10, 3), EnumerationBudget(max_evaluations=100))
    assert check_budget(_box_spec(10, 3)) == evaluation_count(10, 3)


def test_interior_grid_never_beats_endpoints(make_instances):
    for inst in make_instances(30, seed=30, max_n=6, max_k=2):
        z = np.random.default_rng(3).normal(size=inst.spec.n)
        endpoints = oracle_prediction_range(z, inst.data.labels, inst.spec)
        grid = oracle_grid_range(z, inst.data.labels, inst.spec, points=5)
        assert endpoints.lo == pytest.approx(grid.lo, abs=1e-12)
        assert endpoints.hi == pytest.approx(grid.hi, abs=1e-12)


def test_membership_of_attainable_point(nonconvex_example):
    c, y, spec = nonconvex_example
    np.testing.assert_allclose(c.apply(y), [1.0, 3.0, 1.0])
    assert theta_membership(c, [4.0, 5.0, 2.0], y, spec)
    assert theta_membership(c, c.apply(y), y, spec)


def test_midpoint_of_members_is_not_member(nonconvex_example):
    c, y, spec = nonconvex_example
    first = c.apply([1.0, 0.0, 3.0])
    second = c.apply([2.0, -1.0, 3.0])
    np.testing.assert_allclose(first, [4.0, 5.0, 2.0])
    np.testing.assert_allclose(second, [3.0, 4.0, 3.0])
    assert theta_membership(c, first, y, spec)
    assert theta_membership(c, second, y, spec)
    assert not theta_membership(c, (first + second) / 2.0, y, spec)


def test_membership_needs_square_map():
    c = CoefficientMap(np.ones((2, 3)))
    with pytest.raises(NotSquare):
        theta_membership(c, [1.0, 1.0], np.zeros(3), _box_spec(3, 1))


def test_membership_singular_map():
    c = CoefficientMap(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(Singular):
        theta_membership(c, [1.0, 2.0], np.zeros(2), _box_spec(2, 1))


def test_sample_theta_is_deterministic(nonconvex_example):
    c, y, spec = nonconvex_example
    first = sample_theta(c, y, spec, 20, seed=5)
    second = sample_theta(c, y, spec, 20, seed=5)
    assert np.stack(first).tobytes() == np.stack(second).tobytes()
    assert all(theta_membership(c, t, y, spec) for t in first)


def test_describe_members_logs(nonconvex_example, caplog):
    c, y, spec = nonconvex_example
    with caplog.at_level(logging.INFO, logger="label_multiplicity.certify.oracle"):
        assert describe_members(c, [[4.0, 5.0, 2.0]], y, spec) == [True]
    assert "attainable: True" in caplog.text
