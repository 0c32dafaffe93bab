"""
Cross-checks of the greedy certifiers against the brute-force oracle.

Classes
-------
RandomInstance : A seeded small training set, spec, λ and test points.
VerifyResult : Number of checks run and every mismatch found.

Functions
---------
random_instance : Draw one small instance.
verify_instance : Greedy range, theta box and enclosure against the oracle.
verify : Check a given instance and/or a batch of random ones.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from label_multiplicity.certify.approx import theta_box_from_coefficients
from label_multiplicity.certify.errors import ConfigError
from label_multiplicity.certify.exact import range_for_influence
from label_multiplicity.certify.intervals import interval_dot
from label_multiplicity.certify.linalg import RidgeSystem
from label_multiplicity.certify.multiplicity import witness_within_spec
from label_multiplicity.certify.oracle import (
    DEFAULT_BUDGET,
    check_budget,
    oracle_prediction_range,
    oracle_theta_box,
)
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    Dataset,
    EnumerationBudget,
    FloatArray,
    Interval,
    IntervalVector,
    LabelKind,
    MultiplicitySpec,
)

logger = logging.getLogger(__name__)

RangeFn = Callable[[FloatArray, FloatArray, MultiplicitySpec], Interval]


@dataclass
class RandomInstance:
    """
    A small certification problem.

    Attributes
    ----------
    data : Dataset
    spec : MultiplicitySpec
        Asymmetric intervals, some rows ineligible.
    lam : float
    points : ndarray of shape (m, d)
        Test points.
    """

    data: Dataset
    spec: MultiplicitySpec
    lam: float
    points: FloatArray


@dataclass
class VerifyResult:
    checked: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def random_instance(
    rng: np.random.Generator,
    max_n: int = 12,
    max_d: int = 4,
    max_k: int = 3,
    points: int = 3,
    binary: bool | None = None,
) -> RandomInstance:
    """
    Draw a random instance within the oracle's default limits.

    Delta intervals are asymmetric (``lo ∈ [−2, 0]``, ``hi ∈ [0, 2]``,
    occasionally one-sided) and roughly a quarter of the rows are
    ineligible.  The dimension is capped at ``max_n − 1`` so every draw
    has more rows than columns.
    """
    if max_n < 2:
        raise ConfigError(f"random instances need max_n >= 2, got {max_n}")
    d = int(rng.integers(1, min(max_d, max_n - 1) + 1))
    n = int(rng.integers(max(d + 1, 2), max_n + 1))
    features = rng.normal(size=(n, d))
    is_binary = bool(rng.integers(0, 2)) if binary is None else binary
    if is_binary:
        labels = rng.choice([-1.0, 1.0], size=n)
        kind = LabelKind.BINARY
    else:
        labels = rng.normal(scale=2.0, size=n)
        kind = LabelKind.REGRESSION
    lo = -rng.uniform(0.0, 2.0, size=n) * (rng.random(n) < 0.8)
    hi = rng.uniform(0.0, 2.0, size=n) * (rng.random(n) < 0.8)
    eligible = rng.random(n) < 0.75
    lo = np.where(eligible, lo, 0.0)
    hi = np.where(eligible, hi, 0.0)
    k = int(rng.integers(0, min(max_k, n) + 1))
    lam = float(rng.choice([0.01, 0.1, 1.0]))
    return RandomInstance(
        Dataset(features, labels, kind),
        MultiplicitySpec(k, IntervalVector(lo, hi), eligible),
        lam,
        rng.normal(size=(points, d)),
    )


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def _greedy_range(z: FloatArray, labels: FloatArray, spec: MultiplicitySpec) -> Interval:
    return range_for_influence(z, labels, spec).range


def verify_instance(
    data: Dataset,
    lam: float,
    spec: MultiplicitySpec,
    points: ArrayLike,
    budget: EnumerationBudget = DEFAULT_BUDGET,
    range_fn: RangeFn | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    label: str = "instance",
) -> VerifyResult:
    """
    Compare the certifiers with the oracle on one instance.

    Checks, per test point, that the greedy range equals the oracle range
    and lies inside the box enclosure, and that both greedy witnesses are
    feasible; per weight coordinate, that the box equals the oracle range.

    Parameters
    ----------
    range_fn : callable, optional
        Replaces the greedy range computation; used to test the checker.
    """
    check_budget(spec, budget)
    fn = range_fn or _greedy_range
    tol = tolerances.identity
    result = VerifyResult()
    system = RidgeSystem(data, lam, tolerances)
    y = data.labels
    box = theta_box_from_coefficients(system.coefficient_map(), y, spec)
    for j, truth in enumerate(oracle_theta_box(system.coefficient_map(), y, spec, budget)):
        result.checked += 1
        got = box.coords[j]
        if not (_close(got.lo, truth.range.lo, tol) and _close(got.hi, truth.range.hi, tol)):
            result.mismatches.append(
                f"{label}: theta[{j}] box {got.to_list()} != oracle {truth.range.to_list()}"
            )
    for i, x in enumerate(np.asarray(points, dtype=np.float64)):
        z = system.influence(x).z
        result.checked += 1
        greedy = fn(z, y, spec)
        truth_range = oracle_prediction_range(z, y, spec, budget)
        if not (_close(greedy.lo, truth_range.lo, tol) and _close(greedy.hi, truth_range.hi, tol)):
            result.mismatches.append(
                f"{label}: point {i} greedy {greedy.to_list()} != oracle {truth_range.to_list()}"
            )
        enclosure = interval_dot(box.coords, x)
        scale = tol * (1.0 + abs(enclosure.lo) + abs(enclosure.hi))
        if not truth_range.issubset(enclosure, scale):
            result.mismatches.append(
                f"{label}: point {i} range {truth_range.to_list()} "
                f"outside box enclosure {enclosure.to_list()}"
            )
        if range_fn is None:
            prediction = range_for_influence(z, y, spec)
            for name, witness in (
                ("lower", prediction.lower_witness),
                ("upper", prediction.upper_witness),
            ):
                if not witness_within_spec(spec, y, witness, tolerances):
                    result.mismatches.append(f"{label}: point {i} {name} witness infeasible")
    return result


def verify(
    instance: RandomInstance | None = None,
    random_instances: int = 0,
    seed: int = 0,
    budget: EnumerationBudget = DEFAULT_BUDGET,
    range_fn: RangeFn | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> VerifyResult:
    """
    Verify *instance* (if given) and *random_instances* seeded random ones.

    Returns
    -------
    VerifyResult
        Aggregated over all instances.
    """
    total = VerifyResult()
    todo: list[tuple[str, RandomInstance]] = []
    if instance is not None:
        todo.append(("data", instance))
    rng = np.random.default_rng(seed)
    for r in range(random_instances):
        todo.append((f"random[{r}]", random_instance(rng, budget.max_n, max_k=budget.max_k)))
    for label, inst in todo:
        part = verify_instance(
            inst.data, inst.lam, inst.spec, inst.points, budget, range_fn, tolerances, label
        )
        total.checked += part.checked
        total.mismatches.extend(part.mismatches)
    logger.info("verified %d checks, %d mismatches", total.checked, len(total.mismatches))
    return total
