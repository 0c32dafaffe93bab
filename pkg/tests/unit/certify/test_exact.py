import numpy as np
import pytest

from label_multiplicity.certify.errors import NegativeEpsilon, NotBinary
from label_multiplicity.certify.exact import (
    ExactCertifier,
    certify_classification,
    certify_regression,
    max_prediction,
    min_prediction,
    minimum_breaking_budget,
    potential_impacts,
    predicted_class,
    prediction_range,
    range_for_influence,
)
from label_multiplicity.certify.oracle import oracle_prediction_range
from label_multiplicity.certify.types import (
    Dataset,
    Direction,
    Interval,
    IntervalVector,
    LabelKind,
    MultiplicitySpec,
    PerturbationWitness,
    PredictionRange,
    VerdictStatus,
)

Z = np.array([2.0, -1.0, 3.0])


def _box_spec(n: int, k: int, lo: float = -1.0, hi: float = 1.0) -> MultiplicitySpec:
    return MultiplicitySpec(k, IntervalVector.filled(n, Interval(lo, hi)), np.ones(n, bool))


def _range(lo: float, hi: float, base: float, kind: LabelKind = LabelKind.REGRESSION):
    low = PerturbationWitness(((0, -1.0),), np.array([-1.0]))
    up = PerturbationWitness(((0, 1.0),), np.array([1.0]))
    return PredictionRange(Interval(lo, hi), low, up, base, kind)


def test_potential_impacts():
    spec = _box_spec(3, 2)
    np.testing.assert_array_equal(potential_impacts(Z, spec, Direction.UP), [2.0, 1.0, 3.0])
    np.testing.assert_array_equal(potential_impacts(Z, spec, Direction.DOWN), [-2.0, -1.0, -3.0])


def test_potential_impacts_zero_when_ineligible():
    spec = MultiplicitySpec(
        2, IntervalVector.filled(3, Interval(-1.0, 1.0)), np.array([True, False, True])
    )
    assert potential_impacts(Z, spec, Direction.UP)[1] == 0.0


def test_sign_flip_swaps_impacts():
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = rng.normal(size=6)
        spec = _box_spec(6, 2, -0.7, 0.7)
        np.testing.assert_allclose(
            potential_impacts(-z, spec, Direction.UP), -potential_impacts(z, spec, Direction.DOWN)
        )


def test_max_prediction_example():
    value, witness = max_prediction(Z, np.zeros(3), _box_spec(3, 2))
    assert value == 5.0
    assert witness.changed == ((2, 1.0), (0, 1.0))
    np.testing.assert_array_equal(witness.resulting_labels, [1.0, 0.0, 1.0])


def test_min_prediction_example():
    value, witness = min_prediction(Z, np.zeros(3), _box_spec(3, 2))
    assert value == -5.0
    assert witness.indices == (2, 0)


def test_zero_budget_is_base():
    y = np.array([0.5, 1.5, -2.0])
    base = float(Z @ y)
    assert max_prediction(Z, y, _box_spec(3, 0))[0] == base
    assert min_prediction(Z, y, _box_spec(3, 0))[0] == base
    r = range_for_influence(Z, y, _box_spec(3, 0))
    assert r.range == Interval(base, base)


def test_ties_prefer_lower_index():
    z = np.array([1.0, 2.0, 2.0, 2.0])
    _, witness = max_prediction(z, np.zeros(4), _box_spec(4, 2))
    assert witness.indices == (1, 2)


def test_zero_impacts_never_selected():
    z = np.array([0.0, 1.0, 0.0])
    value, witness = max_prediction(z, np.zeros(3), _box_spec(3, 3))
    assert value == 1.0
    assert witness.indices == (1,)


def test_one_sided_intervals():
    spec = MultiplicitySpec(
        1, IntervalVector(np.array([0.0, -3.0]), np.array([2.0, 0.0])), np.ones(2, bool)
    )
    z = np.array([1.0, 1.0])
    assert max_prediction(z, np.zeros(2), spec)[0] == 2.0
    assert min_prediction(z, np.zeros(2), spec)[0] == -3.0


def test_min_base_max_ordering(make_instances):
    for inst in make_instances(200, seed=1):
        certifier = ExactCertifier(inst.data, inst.lam, inst.spec)
        for x in inst.points:
            r = certifier.prediction_range(x)
            assert r.range.lo <= r.base <= r.range.hi


def test_matches_oracle(make_instances):
    for inst in make_instances(60, seed=2):
        certifier = ExactCertifier(inst.data, inst.lam, inst.spec)
        for x in inst.points:
            z = certifier.system.influence(x)
            expected = oracle_prediction_range(z, inst.data.labels, inst.spec)
            got = certifier.prediction_range(x).range
            assert got.lo == pytest.approx(expected.lo, abs=1e-9)
            assert got.hi == pytest.approx(expected.hi, abs=1e-9)


def test_witnesses_attain_endpoints(make_instances):
    for inst in make_instances(50, seed=3):
        certifier = ExactCertifier(inst.data, inst.lam, inst.spec)
        for z in certifier.iter_influences(inst.points):
            r = range_for_influence(z, inst.data.labels, inst.spec)
            attained = float(z @ r.lower_witness.resulting_labels)
            assert attained == pytest.approx(r.range.lo, abs=1e-9)
            attained = float(z @ r.upper_witness.resulting_labels)
            assert attained == pytest.approx(r.range.hi, abs=1e-9)


def test_prediction_range_function(make_instances):
    inst = make_instances(1, seed=4)[0]
    r = prediction_range(inst.data, inst.lam, inst.spec, inst.points[0])
    again = ExactCertifier(inst.data, inst.lam, inst.spec).prediction_range(inst.points[0])
    assert r.range == again.range
    assert r.upper_witness.changed == again.upper_witness.changed


def test_range_grows_with_budget(make_instances):
    for inst in make_instances(40, seed=5):
        certifier = ExactCertifier(inst.data, inst.lam, inst.spec.with_budget(0))
        for z in certifier.iter_influences(inst.points):
            previous = None
            for k in range(inst.spec.n + 1):
                r = range_for_influence(z, inst.data.labels, inst.spec.with_budget(k)).range
                if previous is not None:
                    assert previous.issubset(r)
                previous = r


def test_range_grows_with_eligibility(make_instances):
    rng = np.random.default_rng(9)
    for inst in make_instances(30, seed=6):
        n = inst.spec.n
        delta = IntervalVector(-rng.uniform(0.0, 1.0, n), rng.uniform(0.0, 1.0, n))
        some = rng.random(n) < 0.5
        narrow_spec = MultiplicitySpec(inst.spec.k, delta, some)
        wide_spec = MultiplicitySpec(inst.spec.k, delta, some | (rng.random(n) < 0.5))
        z = rng.normal(size=n)
        narrow = range_for_influence(z, inst.data.labels, narrow_spec).range
        assert narrow.issubset(range_for_influence(z, inst.data.labels, wide_spec).range)


def test_regression_degenerate_is_robust():
    assert certify_regression(_range(1.0, 1.0, 1.0), 0.0).status is VerdictStatus.ROBUST


def test_regression_lower_witness_reported():
    verdict = certify_regression(_range(-3.0, 1.0, 0.0), 2.0)
    assert verdict.status is VerdictStatus.NOT_ROBUST
    assert verdict.counterexample is not None
    assert verdict.counterexample.changed == ((0, -1.0),)


def test_regression_upper_witness_first():
    verdict = certify_regression(_range(-3.0, 3.0, 0.0), 2.0)
    assert verdict.counterexample is not None
    assert verdict.counterexample.changed == ((0, 1.0),)


def test_regression_band_is_closed():
    assert certify_regression(_range(-2.0, 2.0, 0.0), 2.0).robust


def test_negative_epsilon():
    with pytest.raises(NegativeEpsilon):
        certify_regression(_range(0.0, 0.0, 0.0), -0.1)


def test_classification_verdicts():
    binary = LabelKind.BINARY
    assert certify_classification(_range(0.1, 0.9, 0.5, binary)).robust
    verdict = certify_classification(_range(-0.1, 0.9, 0.5, binary))
    assert not verdict.robust
    assert verdict.counterexample is not None and verdict.counterexample.changed == ((0, -1.0),)


def test_classification_zero_is_negative_class():
    binary = LabelKind.BINARY
    assert predicted_class(0.0) == -1
    assert certify_classification(_range(-1.0, 0.0, 0.0, binary)).robust
    # Reaching exactly 0 from the positive side flips the class.
    assert not certify_classification(_range(0.0, 1.0, 0.5, binary)).robust


def test_classification_needs_binary():
    with pytest.raises(NotBinary):
        certify_classification(_range(0.1, 0.9, 0.5))


def test_classification_matches_sign_search(make_instances):
    for inst in make_instances(40, seed=7, binary=True):
        certifier = ExactCertifier(inst.data, inst.lam, inst.spec)
        for x in inst.points:
            z = certifier.system.influence(x)
            truth = oracle_prediction_range(z, inst.data.labels, inst.spec)
            base_class = predicted_class(z.base_prediction)
            extremes = {predicted_class(truth.lo), predicted_class(truth.hi)}
            flips = extremes != {base_class}
            assert certifier.certify(x, "classification").robust == (not flips)


def test_breaking_budget_consistent_with_verdicts(make_instances):
    for inst in make_instances(40, seed=8):
        full = inst.spec.with_budget(inst.spec.n)
        certifier = ExactCertifier(inst.data, inst.lam, full)
        task = "classification" if inst.data.label_kind is LabelKind.BINARY else "regression"
        for z in certifier.iter_influences(inst.points):
            breaking = minimum_breaking_budget(z, inst.data.labels, full, task, 0.5)
            for k in range(full.n + 1):
                r = range_for_influence(
                    z, inst.data.labels, full.with_budget(k), inst.data.label_kind
                )
                robust = (
                    certify_classification(r).robust
                    if task == "classification"
                    else certify_regression(r, 0.5).robust
                )
                assert robust == (breaking is None or k < breaking)


def test_classification_requires_binary_dataset():
    data = Dataset(np.eye(2), np.array([0.3, 2.0]))
    certifier = ExactCertifier(data, 1.0, _box_spec(2, 1))
    with pytest.raises(NotBinary):
        certifier.certify([1.0, 0.0], "classification")
