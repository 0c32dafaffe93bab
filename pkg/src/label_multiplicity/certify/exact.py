"""
Exact pointwise certification by greedy label perturbation.

The prediction of a test point is ``z·y``, linear in the training labels,
so the largest attainable prediction changes the ``k`` labels with the
largest positive potential impact to the endpoint of their delta interval
that pushes ``z·y`` up (and symmetrically for the smallest).  Both bounds
are always computed; the verdict functions decide robustness from the
resulting range.

Ties between equal impacts are broken by ascending sample index and
zero impacts are never selected, so witnesses are deterministic and
minimal.

Classes
-------
ExactCertifier : One factorization, many pointwise queries.

Functions
---------
potential_impacts : Per-sample maximal change of ``z·y``.
max_prediction : Largest attainable prediction with its witness.
min_prediction : Smallest attainable prediction with its witness.
range_for_influence : Both bounds for a precomputed influence vector.
prediction_range : Both bounds for a test point.
certify_regression : ε-band robustness verdict.
certify_classification : Sign robustness verdict.
predicted_class : The ±1 class of a real prediction.
minimum_breaking_budget : Smallest budget that breaks robustness.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from label_multiplicity.certify.errors import (
    DimensionMismatch,
    NegativeEpsilon,
    NotBinary,
)
from label_multiplicity.certify.linalg import RidgeSystem
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    Dataset,
    Direction,
    FloatArray,
    InfluenceVector,
    Interval,
    LabelKind,
    MultiplicitySpec,
    PerturbationWitness,
    PredictionRange,
    Verdict,
    VerdictStatus,
)

logger = logging.getLogger(__name__)

Task = Literal["regression", "classification"]


def _influence_array(z: InfluenceVector | ArrayLike) -> FloatArray:
    if isinstance(z, InfluenceVector):
        return z.z
    return np.asarray(z, dtype=np.float64)


def potential_impacts(
    z: InfluenceVector | ArrayLike, spec: MultiplicitySpec, direction: Direction
) -> FloatArray:
    """
    Maximal change of ``z·y`` from perturbing each label alone.

    Parameters
    ----------
    z : InfluenceVector or array_like of shape (n,)
    spec : MultiplicitySpec
    direction : Direction
        ``UP`` gives ρ⁺ (all ≥ 0), ``DOWN`` gives ρ⁻ (all ≤ 0).

    Returns
    -------
    ndarray of shape (n,)
        Zero wherever the sample is ineligible.
    """
    zv = _influence_array(z)
    if zv.shape != (spec.n,):
        raise DimensionMismatch(f"influence shape {zv.shape} vs spec n={spec.n}")
    nonneg = zv >= 0
    lo, hi = spec.delta.lo, spec.delta.hi
    if Direction(direction) is Direction.UP:
        rho = np.where(nonneg, zv * hi, zv * lo)
    else:
        rho = np.where(nonneg, zv * lo, zv * hi)
    rho[~spec.eligible] = 0.0
    return rho


def _rank(magnitudes: FloatArray, chosen: NDArray[np.intp]) -> NDArray[np.intp]:
    """Order *chosen* by decreasing magnitude, ties by ascending index."""
    order = np.lexsort((chosen, -magnitudes[chosen]))
    return chosen[order]


def _select_top(magnitudes: FloatArray, k: int) -> NDArray[np.intp]:
    """
    Indices of the ``k`` largest positive entries, ranked.

    Uses a partial partition rather than a full sort.
    """
    candidates = np.flatnonzero(magnitudes > 0)
    if k <= 0 or candidates.size == 0:
        return np.empty(0, dtype=np.intp)
    if candidates.size > k:
        values = magnitudes[candidates]
        cut = values.size - k
        kth = np.partition(values, cut)[cut]
        above = candidates[values > kth]
        ties = candidates[values == kth][: k - above.size]
        candidates = np.concatenate([above, ties])
    return _rank(magnitudes, candidates)


def _greedy(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    direction: Direction,
) -> tuple[float, PerturbationWitness]:
    zv = _influence_array(z)
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != zv.shape:
        raise DimensionMismatch(f"labels shape {y.shape} vs influence shape {zv.shape}")
    rho = potential_impacts(zv, spec, direction)
    up = Direction(direction) is Direction.UP
    chosen = _select_top(rho if up else -rho, spec.k)
    base = float(zv @ y)
    if chosen.size == 0:
        return base, PerturbationWitness.unchanged(y)
    toward_hi = (zv[chosen] >= 0) if up else (zv[chosen] < 0)
    applied = np.where(toward_hi, spec.delta.hi[chosen], spec.delta.lo[chosen])
    perturbed = y.copy()
    perturbed[chosen] += applied
    value = base + float(np.cumsum(rho[chosen])[-1])
    witness = PerturbationWitness(
        tuple(zip(chosen.tolist(), applied.tolist(), strict=True)), perturbed
    )
    return value, witness


def max_prediction(
    z: InfluenceVector | ArrayLike, labels: ArrayLike, spec: MultiplicitySpec
) -> tuple[float, PerturbationWitness]:
    """
    Largest ``z·y'`` over the perturbation set.

    Returns
    -------
    (float, PerturbationWitness)
        The maximum and labels attaining it.
    """
    return _greedy(z, labels, spec, Direction.UP)


def min_prediction(
    z: InfluenceVector | ArrayLike, labels: ArrayLike, spec: MultiplicitySpec
) -> tuple[float, PerturbationWitness]:
    """Smallest ``z·y'`` over the perturbation set, with its witness."""
    return _greedy(z, labels, spec, Direction.DOWN)


def range_for_influence(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    label_kind: LabelKind = LabelKind.REGRESSION,
) -> PredictionRange:
    """Exact prediction range for a precomputed influence vector."""
    lo, lower = min_prediction(z, labels, spec)
    hi, upper = max_prediction(z, labels, spec)
    base = float(_influence_array(z) @ np.asarray(labels, dtype=np.float64))
    return PredictionRange(Interval(lo, hi), lower, upper, base, label_kind)


def prediction_range(
    data: Dataset,
    lam: float,
    spec: MultiplicitySpec,
    point: ArrayLike,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> PredictionRange:
    """
    Exact attainable prediction interval for *point*.

    Computes ``z`` once and runs the greedy in both directions.
    """
    if spec.n != data.n:
        raise DimensionMismatch(f"spec n={spec.n} vs dataset n={data.n}")
    z = RidgeSystem(data, lam, tolerances).influence(point)
    return range_for_influence(z, data.labels, spec, data.label_kind)


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


def check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if math.isnan(eps) or eps < 0.0:
        raise NegativeEpsilon(f"epsilon must be >= 0, got {epsilon}")
    return eps


def _above_band(value: float, base: float, eps: float, tau: float) -> bool:
    return value > base + eps + tau


def _below_band(value: float, base: float, eps: float, tau: float) -> bool:
    return value < base - eps - tau


def certify_regression(
    prediction: PredictionRange,
    epsilon: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Verdict:
    """
    Robust iff the range lies in ``[base − ε, base + ε]`` (slack τ).

    The counterexample is the upper witness when the maximum leaves the
    band, otherwise the lower witness.
    """
    eps = check_epsilon(epsilon)
    tau = tolerances.decision
    base = prediction.base
    if _above_band(prediction.range.hi, base, eps, tau):
        return Verdict(VerdictStatus.NOT_ROBUST, prediction.upper_witness)
    if _below_band(prediction.range.lo, base, eps, tau):
        return Verdict(VerdictStatus.NOT_ROBUST, prediction.lower_witness)
    return Verdict(VerdictStatus.ROBUST)


def predicted_class(value: float) -> int:
    """``+1`` if ``value > 0`` else ``−1``; exactly 0 maps to −1."""
    return 1 if value > 0.0 else -1


def certify_classification(prediction: PredictionRange) -> Verdict:
    """
    Robust iff no attainable prediction changes the predicted class.

    For ``base > 0`` this needs ``range.lo > 0``; for ``base <= 0`` it
    needs ``range.hi <= 0``.
    """
    if prediction.label_kind is not LabelKind.BINARY:
        raise NotBinary("classification certification needs a model trained on ±1 labels")
    if predicted_class(prediction.base) > 0:
        if prediction.range.lo > 0.0:
            return Verdict(VerdictStatus.ROBUST)
        return Verdict(VerdictStatus.NOT_ROBUST, prediction.lower_witness)
    if prediction.range.hi <= 0.0:
        return Verdict(VerdictStatus.ROBUST)
    return Verdict(VerdictStatus.NOT_ROBUST, prediction.upper_witness)


def certify(
    prediction: PredictionRange,
    task: Task,
    epsilon: float = 0.0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Verdict:
    """Dispatch to :func:`certify_regression` or :func:`certify_classification`."""
    if task == "classification":
        return certify_classification(prediction)
    return certify_regression(prediction, epsilon, tolerances)


def _first_true(flags: NDArray[np.bool_]) -> int | None:
    hits = np.flatnonzero(flags)
    return int(hits[0]) + 1 if hits.size else None


def minimum_breaking_budget(
    z: InfluenceVector | ArrayLike,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    task: Task,
    epsilon: float = 0.0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> int | None:
    """
    Smallest budget at which the point stops being robust.

    The deltas and eligibility of *spec* are used; its ``k`` caps the
    search.  For every ``k' <= spec.k`` the point is robust at ``k'``
    exactly when ``k'`` is below the returned value.

    Returns
    -------
    int or None
        ``None`` when the point is robust at every budget up to ``spec.k``.
    """
    zv = _influence_array(z)
    y = np.asarray(labels, dtype=np.float64)
    if task == "regression":
        eps = check_epsilon(epsilon)
    elif task != "classification":
        raise ValueError(f"unknown task {task!r}")
    base = float(zv @ y)
    rho_up = potential_impacts(zv, spec, Direction.UP)
    rho_down = potential_impacts(zv, spec, Direction.DOWN)
    highs = base + np.cumsum(rho_up[_rank(rho_up, np.flatnonzero(rho_up > 0))])
    lows = base + np.cumsum(rho_down[_rank(-rho_down, np.flatnonzero(rho_down < 0))])

    if task == "classification":
        if predicted_class(base) > 0:
            found = _first_true(lows <= 0.0)
        else:
            found = _first_true(highs > 0.0)
    else:
        tau = tolerances.decision
        candidates = [
            _first_true(highs > base + eps + tau),
            _first_true(lows < base - eps - tau),
        ]
        hits = [c for c in candidates if c is not None]
        found = min(hits) if hits else None
    if found is None or found > spec.k:
        return None
    return found


# ---------------------------------------------------------------------------
# Certifier object
# ---------------------------------------------------------------------------


class ExactCertifier:
    """
    Pointwise certifier bound to one training set, λ and spec.

    The factorization is computed once on construction; queries never
    refactor and may run concurrently.

    Parameters
    ----------
    data : Dataset
        Training data.
    lam : float
        Ridge regularization.
    spec : MultiplicitySpec
        Perturbation set materialized on *data*.
    system : RidgeSystem, optional
        Reuse an existing factorization of the same ``(data, λ)``.
    """

    def __init__(
        self,
        data: Dataset,
        lam: float,
        spec: MultiplicitySpec,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
        system: RidgeSystem | None = None,
    ) -> None:
        if spec.n != data.n:
            raise DimensionMismatch(f"spec n={spec.n} vs dataset n={data.n}")
        self.data = data
        self.spec = spec
        self.tolerances = tolerances
        self.system = system if system is not None else RidgeSystem(data, lam, tolerances)

    def prediction_range(self, point: ArrayLike) -> PredictionRange:
        z = self.system.influence(point)
        return range_for_influence(z, self.data.labels, self.spec, self.data.label_kind)

    def certify(self, point: ArrayLike, task: Task, epsilon: float = 0.0) -> Verdict:
        return certify(self.prediction_range(point), task, epsilon, self.tolerances)

    def iter_influences(
        self, points: ArrayLike, chunk_size: int = 256
    ) -> Iterator[FloatArray]:
        """Yield influence vectors of *points* in order, batching the solves."""
        pts = np.asarray(points, dtype=np.float64)
        for start in range(0, pts.shape[0], chunk_size):
            yield from self.system.influence_matrix(pts[start : start + chunk_size])

    def prediction_ranges(
        self, points: ArrayLike, chunk_size: int = 256
    ) -> list[PredictionRange]:
        """Prediction ranges of every row of *points*."""
        return [
            range_for_influence(z, self.data.labels, self.spec, self.data.label_kind)
            for z in self.iter_influences(points, chunk_size)
        ]

    def breaking_budgets(
        self,
        points: ArrayLike,
        task: Task,
        epsilon: float = 0.0,
        chunk_size: int = 256,
    ) -> list[int | None]:
        """:func:`minimum_breaking_budget` for every row of *points*."""
        return [
            minimum_breaking_budget(
                z, self.data.labels, self.spec, task, epsilon, self.tolerances
            )
            for z in self.iter_influences(points, chunk_size)
        ]
