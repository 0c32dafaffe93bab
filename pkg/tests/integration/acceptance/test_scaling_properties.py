"""
Monotonicity in the budget and the intervals, and invariance of
regression verdicts, range offsets and chosen samples under a common
rescaling of intervals and ε.
"""

import numpy as np
import pytest

from label_multiplicity.certify.exact import (
    certify,
    minimum_breaking_budget,
    potential_impacts,
    range_for_influence,
)
from label_multiplicity.certify.linalg import RidgeSystem
from label_multiplicity.certify.types import Direction

SLACK = 1e-9


def _influences(inst):
    system = RidgeSystem(inst.data, inst.lam)
    return [system.influence(x).z for x in inst.points]


def _top_indices(impacts, k):
    magnitudes = np.abs(impacts)
    positive = np.flatnonzero(magnitudes > 0)
    order = positive[np.argsort(-magnitudes[positive], kind="stable")]
    return set(order[:k].tolist())


@pytest.mark.parametrize("factor", [0.5, 3.0, 10.0])
def test_regression_verdict_depends_on_ratio_only(make_instances, factor):
    rng = np.random.default_rng(int(factor * 10))
    for inst in make_instances(50, seed=31, binary=False):
        y = inst.data.labels
        scaled_spec = inst.spec.scaled(factor)
        for z in _influences(inst):
            epsilon = float(rng.uniform(0.0, 2.0))
            before = range_for_influence(z, y, inst.spec)
            after = range_for_influence(z, y, scaled_spec)

            # Offsets from the base prediction scale with the intervals.
            for got, want in (
                (after.range.hi - after.base, factor * (before.range.hi - before.base)),
                (after.base - after.range.lo, factor * (before.base - before.range.lo)),
                (after.range.width, factor * before.range.width),
            ):
                assert got == pytest.approx(want, rel=SLACK, abs=SLACK)

            # The greedy picks the same samples in both directions.
            for direction in (Direction.UP, Direction.DOWN):
                k = inst.spec.k
                picked = _top_indices(potential_impacts(z, inst.spec, direction), k)
                picked_scaled = _top_indices(potential_impacts(z, scaled_spec, direction), k)
                assert picked == picked_scaled
            assert set(before.lower_witness.indices) == set(after.lower_witness.indices)
            assert set(before.upper_witness.indices) == set(after.upper_witness.indices)

            verdict = certify(before, "regression", epsilon)
            scaled_verdict = certify(after, "regression", factor * epsilon)
            assert verdict.robust == scaled_verdict.robust


def test_range_grows_with_budget(make_instances):
    for inst in make_instances(60, seed=12):
        y = inst.data.labels
        top = inst.spec.eligible_count
        for z in _influences(inst):
            previous = None
            for k in range(top + 1):
                current = range_for_influence(z, y, inst.spec.with_budget(k)).range
                if previous is not None:
                    slack = SLACK * (1.0 + abs(current.lo) + abs(current.hi))
                    assert previous.issubset(current, slack)
                previous = current


def test_range_grows_with_intervals(make_instances):
    for inst in make_instances(60, seed=13):
        y = inst.data.labels
        for z in _influences(inst):
            narrow = range_for_influence(z, y, inst.spec).range
            wide = range_for_influence(z, y, inst.spec.scaled(1.5)).range
            assert narrow.issubset(wide, SLACK * (1.0 + abs(wide.lo) + abs(wide.hi)))


def test_robustness_is_monotone_in_budget(make_instances):
    for inst in make_instances(60, seed=14, binary=True):
        y = inst.data.labels
        for z in _influences(inst):
            prediction_robust = [
                certify(
                    range_for_influence(z, y, inst.spec.with_budget(k), inst.data.label_kind),
                    "classification",
                ).robust
                for k in range(inst.spec.eligible_count + 1)
            ]
            # Once broken, a point stays broken at every larger budget.
            first_broken = next((k for k, ok in enumerate(prediction_robust) if not ok), None)
            if first_broken is not None:
                assert not any(prediction_robust[first_broken:])
            spec = inst.spec.with_budget(inst.spec.eligible_count)
            assert minimum_breaking_budget(z, y, spec, "classification") == first_broken
