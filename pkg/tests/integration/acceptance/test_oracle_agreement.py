"""
Greedy and approximate certifiers against exhaustive enumeration on generated
instances.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from strategies import certification_instances

from label_multiplicity.certify.approx import ApproxCertifier, build_theta_box
from label_multiplicity.certify.exact import ExactCertifier, range_for_influence
from label_multiplicity.certify.intervals import interval_dot
from label_multiplicity.certify.linalg import RidgeSystem
from label_multiplicity.certify.multiplicity import witness_within_spec
from label_multiplicity.certify.oracle import oracle_search, oracle_theta_box, sample_theta
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES
from label_multiplicity.certify.types import Interval, LabelKind
from label_multiplicity.tools.verify import verify

TOL = 1e-9
DECISION = DEFAULT_TOLERANCES.decision


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= TOL * (1.0 + abs(a) + abs(b))


@pytest.mark.slow
@settings(max_examples=200, deadline=None)
@given(certification_instances())
def test_greedy_range_equals_oracle(inst):
    system = RidgeSystem(inst.data, inst.lam)
    y = inst.data.labels
    for x in inst.points:
        z = system.influence(x).z
        greedy = range_for_influence(z, y, inst.spec)
        truth = oracle_search(z, y, inst.spec)
        assert _close(greedy.range.lo, truth.range.lo)
        assert _close(greedy.range.hi, truth.range.hi)
        for witness in (greedy.lower_witness, greedy.upper_witness):
            assert witness.size <= inst.spec.k
            assert witness_within_spec(inst.spec, y, witness)
        # Witnesses attain the endpoints they stand for.
        assert _close(float(z @ greedy.lower_witness.resulting_labels), greedy.range.lo)
        assert _close(float(z @ greedy.upper_witness.resulting_labels), greedy.range.hi)


@settings(max_examples=150, deadline=None)
@given(certification_instances(points=5))
def test_approx_robust_implies_exact_robust(inst):
    task = "classification" if inst.data.label_kind is LabelKind.BINARY else "regression"
    exact = ExactCertifier(inst.data, inst.lam, inst.spec)
    approx = ApproxCertifier(inst.data, inst.lam, inst.spec, system=exact.system)
    robust = approx.certify_many(inst.points, task, 1.0)
    for x, ok in zip(inst.points, robust, strict=True):
        prediction = exact.prediction_range(x)
        enclosure = interval_dot(approx.box.coords, x)
        slack = TOL * (1.0 + abs(enclosure.lo) + abs(enclosure.hi))
        assert prediction.range.issubset(enclosure, slack)
        if not ok:
            continue
        # Rounding may put an exact endpoint a hair past the enclosure.
        base = float(approx.box.base_theta @ x)
        if task == "regression":
            assert prediction.range.hi <= base + 1.0 + DECISION + slack
            assert prediction.range.lo >= base - 1.0 - DECISION - slack
        elif base > 0.0:
            assert prediction.range.lo > -slack
        else:
            assert prediction.range.hi <= slack


@pytest.mark.slow
def test_theta_box_is_tightest(make_instances):
    for inst in make_instances(100, seed=7):
        system = RidgeSystem(inst.data, inst.lam)
        cmap = system.coefficient_map()
        box = build_theta_box(inst.data, inst.lam, inst.spec, system=system)
        y = inst.data.labels
        for j, truth in enumerate(oracle_theta_box(cmap, y, inst.spec)):
            got = box.coords[j]
            assert _close(got.lo, truth.range.lo) and _close(got.hi, truth.range.hi)
            width = got.width
            if width < 1e-9:
                continue
            shrink = 1e-6 * width
            lowest = float(cmap.c[j] @ truth.lower_labels)
            highest = float(cmap.c[j] @ truth.upper_labels)
            assert lowest < got.lo + shrink
            assert highest > got.hi - shrink


def test_approx_enclosure_is_sound(make_instances):
    for seed, inst in enumerate(make_instances(40, seed=99)):
        system = RidgeSystem(inst.data, inst.lam)
        box = build_theta_box(inst.data, inst.lam, inst.spec, system=system)
        samples = sample_theta(system.coefficient_map(), inst.data.labels, inst.spec, 20, seed)
        for theta in samples:
            assert box.coords.contains_point(theta, tol=1e-9 * (1.0 + np.abs(theta).max()))
        for x in inst.points:
            enclosure = interval_dot(box.coords, x)
            slack = TOL * (1.0 + abs(enclosure.lo) + abs(enclosure.hi))
            exact = range_for_influence(system.influence(x).z, inst.data.labels, inst.spec)
            assert exact.range.issubset(enclosure, slack)
            for theta in samples:
                assert enclosure.contains(float(theta @ x), slack)


def test_verify_detects_an_off_by_one_budget(make_instances):
    def one_extra_change(z, labels, spec):
        if spec.k >= spec.eligible_count:
            return range_for_influence(z, labels, spec).range
        return range_for_influence(z, labels, spec.with_budget(spec.k + 1)).range

    clean = verify(random_instances=30, seed=5)
    broken = verify(random_instances=30, seed=5, range_fn=one_extra_change)
    assert clean.ok
    assert not broken.ok


def test_verify_detects_a_shifted_range():
    def shifted(z, labels, spec):
        r = range_for_influence(z, labels, spec).range
        return Interval(r.lo + 1e-3, r.hi + 1e-3)

    assert not verify(random_instances=5, seed=3, range_fn=shifted).ok
