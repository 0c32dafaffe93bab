"""
Global interval over-approximation of the attainable weights.

Every weight coordinate ``θ_i = c_i·y`` is linear in the labels, so the
greedy of :mod:`label_multiplicity.certify.exact` applied to row ``c_i``
of the coefficient map gives its exact range.  The box of those ranges
is the tightest hyperrectangle around all attainable weight vectors;
certifying a point is then one interval dot product.

The box check is one-sided: a box that fails the check says nothing
about the point, so the only outcomes are Robust and Unknown.

Classes
-------
ApproxCertifier : Cached box, many cheap queries.

Functions
---------
coordinate_ranges : Exact range (with witnesses) of every weight coordinate.
theta_box_from_coefficients : Box from a precomputed coefficient map.
build_theta_box : Box for a training set, λ and spec.
certify_approx : Robust/Unknown verdict from a box.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from label_multiplicity.certify.errors import DimensionMismatch, NotBinary
from label_multiplicity.certify.exact import (
    check_epsilon,
    predicted_class,
    range_for_influence,
)
from label_multiplicity.certify.intervals import interval_dot, interval_dot_many
from label_multiplicity.certify.linalg import RidgeSystem
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    ApproxStatus,
    CoefficientMap,
    Dataset,
    FloatArray,
    IntervalVector,
    LabelKind,
    MultiplicitySpec,
    PredictionRange,
    ThetaBox,
)

logger = logging.getLogger(__name__)

Task = Literal["regression", "classification"]


def coordinate_ranges(
    cmap: CoefficientMap,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    threads: int = 1,
) -> list[PredictionRange]:
    """
    Exact range of each ``θ_i`` over the perturbation set.

    Parameters
    ----------
    cmap : CoefficientMap
        ``d × n`` map from labels to weights.
    labels : array_like of shape (n,)
    spec : MultiplicitySpec
    threads : int
        Coordinates are independent; more than one thread runs them in a pool.

    Returns
    -------
    list of PredictionRange
        One per coordinate, endpoints attained by the returned witnesses.
    """
    if cmap.n != spec.n:
        raise DimensionMismatch(f"coefficient map has {cmap.n} columns, spec n={spec.n}")
    y = np.asarray(labels, dtype=np.float64)

    def one(i: int) -> PredictionRange:
        return range_for_influence(cmap.c[i], y, spec)

    if threads <= 1 or cmap.d == 1:
        return [one(i) for i in range(cmap.d)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(cmap.d)))


def theta_box_from_coefficients(
    cmap: CoefficientMap,
    labels: ArrayLike,
    spec: MultiplicitySpec,
    threads: int = 1,
) -> ThetaBox:
    """Box from an explicit coefficient map; the map need not come from a fit."""
    ranges = coordinate_ranges(cmap, labels, spec, threads)
    coords = IntervalVector(
        np.array([r.range.lo for r in ranges], dtype=np.float64),
        np.array([r.range.hi for r in ranges], dtype=np.float64),
    )
    base = np.array([r.base for r in ranges], dtype=np.float64)
    return ThetaBox(coords, base)


def build_theta_box(
    data: Dataset,
    lam: float,
    spec: MultiplicitySpec,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    system: RidgeSystem | None = None,
    threads: int = 1,
) -> ThetaBox:
    """
    Tightest hyperrectangular enclosure of the attainable weights.

    Parameters
    ----------
    data : Dataset
    lam : float
    spec : MultiplicitySpec
    system : RidgeSystem, optional
        Existing factorization of ``(data, λ)``.
    threads : int
        Worker threads for the per-coordinate greedy.

    Returns
    -------
    ThetaBox
    """
    if spec.n != data.n:
        raise DimensionMismatch(f"spec n={spec.n} vs dataset n={data.n}")
    solver = system if system is not None else RidgeSystem(data, lam, tolerances)
    box = theta_box_from_coefficients(solver.coefficient_map(), data.labels, spec, threads)
    logger.debug(
        "built theta box: d=%d, max width %.3g", box.d, float(box.coords.widths.max())
    )
    return box


def _status(robust: bool) -> ApproxStatus:
    return ApproxStatus.ROBUST if robust else ApproxStatus.UNKNOWN


def certify_approx(
    box: ThetaBox,
    point: ArrayLike,
    epsilon: float = 0.0,
    mode: Task = "regression",
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ApproxStatus:
    """
    Robust when every weight in *box* keeps the prediction safe.

    Regression asks for ``box·x ⊆ [θᵀx − ε, θᵀx + ε]`` (slack τ);
    classification asks that ``box·x`` stays on the base class side of 0,
    with the same strict sign rule as the exact certifier.
    """
    x = np.asarray(point, dtype=np.float64)
    if x.shape != (box.d,):
        raise DimensionMismatch(f"test point shape {x.shape}, expected ({box.d},)")
    enclosure = interval_dot(box.coords, x)
    base = float(box.base_theta @ x)
    if mode == "classification":
        if predicted_class(base) > 0:
            return _status(enclosure.lo > 0.0)
        return _status(enclosure.hi <= 0.0)
    eps = check_epsilon(epsilon)
    tau = tolerances.decision
    return _status(enclosure.hi <= base + eps + tau and enclosure.lo >= base - eps - tau)


class ApproxCertifier:
    """
    Box certifier for one training set, λ and spec.

    The box is built eagerly on construction; every query afterwards
    costs one interval dot product.

    Attributes
    ----------
    box : ThetaBox
    """

    def __init__(
        self,
        data: Dataset,
        lam: float,
        spec: MultiplicitySpec,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
        system: RidgeSystem | None = None,
        threads: int = 1,
    ) -> None:
        self._binary = data.label_kind is LabelKind.BINARY
        self.tolerances = tolerances
        self.box = build_theta_box(data, lam, spec, tolerances, system, threads)

    def certify(self, point: ArrayLike, task: Task, epsilon: float = 0.0) -> ApproxStatus:
        if task == "classification" and not self._binary:
            raise NotBinary("classification certification needs a model trained on ±1 labels")
        return certify_approx(self.box, point, epsilon, task, self.tolerances)

    def enclosures(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """Lower and upper ends of ``box·x`` for every row of *points*."""
        return interval_dot_many(self.box.coords, points)

    def certify_many(
        self, points: ArrayLike, task: Task, epsilon: float = 0.0
    ) -> NDArray[np.bool_]:
        """Boolean mask: True where the point is certified Robust."""
        if task == "classification" and not self._binary:
            raise NotBinary("classification certification needs a model trained on ±1 labels")
        pts = np.asarray(points, dtype=np.float64)
        lo, hi = self.enclosures(pts)
        base = pts @ self.box.base_theta
        if task == "classification":
            return np.where(base > 0.0, lo > 0.0, hi <= 0.0)
        eps = check_epsilon(epsilon)
        tau = self.tolerances.decision
        robust: NDArray[np.bool_] = (hi <= base + eps + tau) & (lo >= base - eps - tau)
        return robust
