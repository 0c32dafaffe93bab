"""
Brute-force reference implementations for small instances.

``z·y'`` is linear in ``y'``, so its extremes over the perturbation set
are reached with every changed label at an endpoint of its delta
interval.  The oracle enumerates every subset of at most ``k`` eligible
indices and every endpoint assignment on it; nothing here shares code
with the greedy certifiers beyond the data types.

Every entry point is guarded by an :class:`EnumerationBudget`.

Classes
-------
OracleResult : Range of a linear functional plus the labels attaining it.

Functions
---------
evaluation_count : Number of label vectors the oracle would enumerate.
check_budget : Refuse instances beyond an enumeration budget.
enumerate_feasible_labels : Yield every endpoint-extreme feasible label vector.
oracle_search : Range and attaining labels of ``z·y'``.
oracle_prediction_range : Range of ``z·y'``.
oracle_theta_box : Per-coordinate oracle ranges of ``C·y'``.
oracle_grid_range : Range of ``z·y'`` over a grid of interior deltas.
theta_membership : Whether a weight vector is attainable (square ``C``).
sample_theta : Seeded random attainable weight vectors.
describe_members : Membership of several weight vectors, logged.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from label_multiplicity.certify.errors import (
    BudgetExceeded,
    DimensionMismatch,
    NotSquare,
    Singular,
)
from label_multiplicity.certify.multiplicity import (
    witness_from_labels,
    witness_within_spec,
)
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    CoefficientMap,
    EnumerationBudget,
    FloatArray,
    Interval,
    InfluenceVector,
    MultiplicitySpec,
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = EnumerationBudget()


@dataclass(frozen=True)
class OracleResult:
    """
    Exhaustive range of one linear functional.

    Attributes
    ----------
    range : Interval
    lower_labels : ndarray of shape (n,)
        A feasible label vector attaining ``range.lo``.
    upper_labels : ndarray of shape (n,)
        A feasible label vector attaining ``range.hi``.
    evaluations : int
        Label vectors visited.
    """

    range: Interval
    lower_labels: FloatArray
    upper_labels: FloatArray
    evaluations: int


def evaluation_count(eligible: int, k: int, values_per_label: int = 2) -> int:
    """``Σ_{j<=k} C(m, j)·v^j`` for *m* eligible labels and *v* values each."""
    return sum(
        math.comb(eligible, j) * values_per_label**j for j in range(min(k, eligible) + 1)
    )


def check_budget(
    spec: MultiplicitySpec,
    budget: EnumerationBudget = DEFAULT_BUDGET,
    values_per_label: int = 2,
) -> int:
    """
    Raise :class:`BudgetExceeded` unless the instance fits *budget*.

    Returns
    -------
    int
        The number of label vectors the enumeration will visit.
    """
    if spec.n > budget.max_n:
        raise BudgetExceeded(f"n={spec.n} exceeds oracle limit {budget.max_n}")
    if spec.k > budget.max_k:
        raise BudgetExceeded(f"k={spec.k} exceeds oracle limit {budget.max_k}")
    count = evaluation_count(spec.eligible_count, spec.k, values_per_label)
    if count > budget.max_evaluations:
        raise BudgetExceeded(
            f"{count} label vectors exceed oracle limit {budget.max_evaluations}"
        )
    return count


def _assignments(
    spec: MultiplicitySpec, grid: int | None
) -> Iterator[tuple[tuple[int, ...], tuple[float, ...]]]:
    eligible = np.flatnonzero(spec.eligible).tolist()
    for size in range(min(spec.k, len(eligible)) + 1):
        for subset in itertools.combinations(eligible, size):
            if grid is None:
                choices = [(spec.delta.lo[i], spec.delta.hi[i]) for i in subset]
            else:
                choices = [
                    tuple(np.linspace(spec.delta.lo[i], spec.delta.hi[i], grid))
                    for i in subset
                ]
            for deltas in itertools.product(*choices):
                yield subset, tuple(float(v) for v in deltas)


def enumerate_feasible_labels(
    labels: ArrayLike,
    spec: MultiplicitySpec,
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> Iterator[FloatArray]:
    """
    Yield every feasible label vector with changed labels at interval endpoints.

    The unmodified labels come first.
    """
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (spec.n,):
        raise DimensionMismatch(f"labels shape {y.shape} vs spec n={spec.n}")
    check_budget(spec, budget)
    for subset, deltas in _assignments(spec, None):
        perturbed = y.copy()
        perturbed[list(subset)] += deltas
        yield perturbed


def _search(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    grid: int | None,
) -> OracleResult:
    zv = z.z if isinstance(z, InfluenceVector) else np.asarray(z, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if zv.shape != (spec.n,) or y.shape != (spec.n,):
        raise DimensionMismatch(
            f"influence {zv.shape} and labels {y.shape} vs spec n={spec.n}"
        )
    base = float(zv @ y)
    best_lo = best_hi = base
    lo_change: tuple[tuple[int, ...], tuple[float, ...]] = ((), ())
    hi_change = lo_change
    visited = 0
    for subset, deltas in _assignments(spec, grid):
        visited += 1
        value = base + sum(zv[i] * v for i, v in zip(subset, deltas, strict=True))
        if value < best_lo:
            best_lo, lo_change = value, (subset, deltas)
        if value > best_hi:
            best_hi, hi_change = value, (subset, deltas)

    def labels_for(change: tuple[tuple[int, ...], tuple[float, ...]]) -> FloatArray:
        out = y.copy()
        out[list(change[0])] += change[1]
        return out

    return OracleResult(
        Interval(best_lo, best_hi), labels_for(lo_change), labels_for(hi_change), visited
    )


def oracle_search(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> OracleResult:
    """
    Exhaustive minimum and maximum of ``z·y'`` over the perturbation set.

    Raises
    ------
    BudgetExceeded
        The instance is larger than *budget* allows.
    """
    check_budget(spec, budget)
    return _search(z, labels, spec, None)


def oracle_prediction_range(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> Interval:
    """Exact ``[min, max]`` of ``z·y'`` by enumeration."""
    return oracle_search(z, labels, spec, budget).range


def oracle_theta_box(
    cmap: CoefficientMap | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> list[OracleResult]:
    """:func:`oracle_search` on every row of the coefficient map."""
    c = cmap.c if isinstance(cmap, CoefficientMap) else np.asarray(cmap, dtype=np.float64)
    check_budget(spec, budget)
    return [_search(row, labels, spec, None) for row in c]


def oracle_grid_range(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    points: int = 5,
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> Interval:
    """
    Range of ``z·y'`` with each changed label on a *points*-grid of its interval.

    Interior grid values never beat the endpoints; this exists to check
    that claim.
    """
    if points < 2:
        raise ValueError(f"grid needs at least 2 points, got {points}")
    check_budget(spec, budget, values_per_label=points)
    return _search(z, labels, spec, points).range


def theta_membership(
    cmap: CoefficientMap | ArrayLike,
    target: ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    """
    Whether *target* is an attainable weight vector.

    With a square invertible ``C`` the only labels mapping to *target*
    are ``y' = C⁻¹·target``; membership is then feasibility of ``y'``.

    Raises
    ------
    NotSquare
        ``C`` is not square.
    Singular
        ``C`` is numerically singular.
    """
    c = cmap.c if isinstance(cmap, CoefficientMap) else np.asarray(cmap, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise NotSquare(f"membership needs a square coefficient map, got {c.shape}")
    t = np.asarray(target, dtype=np.float64)
    if t.shape != (c.shape[0],):
        raise DimensionMismatch(f"target shape {t.shape}, expected ({c.shape[0]},)")
    if 1.0 / np.linalg.cond(c) < tolerances.rcond:
        raise Singular("coefficient map is numerically singular")
    try:
        perturbed = scipy.linalg.solve(c, t)
    except scipy.linalg.LinAlgError as exc:
        raise Singular("coefficient map is singular") from exc
    witness = witness_from_labels(labels, perturbed, tolerances)
    return witness_within_spec(spec, labels, witness, tolerances)


def sample_theta(
    cmap: CoefficientMap | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    count: int,
    seed: int = 0,
    budget: EnumerationBudget = DEFAULT_BUDGET,
) -> list[FloatArray]:
    """
    Attainable weight vectors from random feasible label perturbations.

    Each sample picks a change count uniformly from ``0..min(k, m)``, that
    many eligible indices without replacement, and a uniform delta inside
    each interval.  The same seed gives identical output.
    """
    c = cmap.c if isinstance(cmap, CoefficientMap) else np.asarray(cmap, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if c.shape[1] != spec.n or y.shape != (spec.n,):
        raise DimensionMismatch(f"map {c.shape} and labels {y.shape} vs spec n={spec.n}")
    if spec.n > budget.max_n or count > budget.max_evaluations:
        raise BudgetExceeded(
            f"n={spec.n}, count={count} exceed oracle limits "
            f"({budget.max_n}, {budget.max_evaluations})"
        )
    rng = np.random.default_rng(seed)
    eligible = np.flatnonzero(spec.eligible)
    top = min(spec.k, eligible.size)
    out: list[FloatArray] = []
    for _ in range(count):
        size = int(rng.integers(0, top + 1))
        chosen = rng.choice(eligible, size=size, replace=False) if size else eligible[:0]
        perturbed = y.copy()
        perturbed[chosen] += rng.uniform(spec.delta.lo[chosen], spec.delta.hi[chosen])
        out.append(c @ perturbed)
    return out


def describe_members(
    cmap: CoefficientMap | ArrayLike,
    targets: Sequence[ArrayLike],
    labels: ArrayLike,
    spec: MultiplicitySpec,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[bool]:
    """:func:`theta_membership` for each of *targets*, logged one per line."""
    results = []
    for target in targets:
        member = theta_membership(cmap, target, labels, spec, tolerances)
        logger.info("theta %s attainable: %s", np.asarray(target).tolist(), member)
        results.append(member)
    return results
