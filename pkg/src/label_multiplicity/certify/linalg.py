"""
Closed-form ridge regression and influence functionals.

All quantities come from one Cholesky factorization of ``XᵀX + λI`` per
``(dataset, λ)``; :class:`RidgeSystem` owns it and the module-level
functions are thin wrappers that build one.

Classes
-------
RidgeSystem : Factorization shared by θ, z and C.

Functions
---------
fit_ridge : Fit ridge weights.
influence : Influence vector of one test point.
coefficient_map : The matrix ``(XᵀX+λI)⁻¹Xᵀ``.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from label_multiplicity.certify.errors import DimensionMismatch, SingularSystem
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    CoefficientMap,
    Dataset,
    FloatArray,
    InfluenceVector,
    RidgeModel,
)

logger = logging.getLogger(__name__)


def _reciprocal_condition(gram: FloatArray) -> float:
    """``λ_min / λ_max`` of a symmetric positive semi-definite matrix."""
    eigenvalues = scipy.linalg.eigvalsh(gram)
    largest = float(eigenvalues[-1])
    if largest <= 0.0:
        return 0.0
    return max(float(eigenvalues[0]), 0.0) / largest


class RidgeSystem:
    """
    Factored regularized normal equations for one training set.

    Parameters
    ----------
    data : Dataset
        Training data.
    lam : float
        Regularization strength λ ≥ 0.
    tolerances : Tolerances, optional
        ``rcond`` decides singularity when ``λ = 0``.

    Raises
    ------
    SingularSystem
        ``λ = 0`` and ``XᵀX`` is numerically singular, or the matrix is
        not positive definite.
    """

    def __init__(
        self,
        data: Dataset,
        lam: float,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> None:
        lam = float(lam)
        if not math.isfinite(lam) or lam < 0.0:
            raise ValueError(f"lambda must be a finite nonnegative number, got {lam}")
        self.data = data
        self.lam = lam
        self.tolerances = tolerances

        x = data.features
        gram = x.T @ x
        gram[np.diag_indices_from(gram)] += lam
        if lam == 0.0:
            rcond = _reciprocal_condition(gram)
            if rcond < tolerances.rcond:
                raise SingularSystem(
                    f"XᵀX is singular (reciprocal condition {rcond:.3e}); use lambda > 0"
                )
        try:
            self._factor = scipy.linalg.cho_factor(gram, lower=True)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"XᵀX + {lam}I is not positive definite") from exc

        self._xty = x.T @ data.labels
        theta = self.solve(self._xty)
        self.model = RidgeModel(theta, lam)
        logger.debug("factored %dx%d system with lambda=%g", data.d, data.d, lam)

    @property
    def theta(self) -> FloatArray:
        return self.model.theta

    def solve(self, rhs: ArrayLike) -> FloatArray:
        """Solve ``(XᵀX + λI) w = rhs`` for a vector or matrix right-hand side."""
        b = np.asarray(rhs, dtype=np.float64)
        if b.shape[0] != self.data.d:
            raise DimensionMismatch(
                f"right-hand side has {b.shape[0]} rows, expected {self.data.d}"
            )
        result: FloatArray = scipy.linalg.cho_solve(self._factor, b)
        return result

    def residual(self, theta: ArrayLike | None = None) -> float:
        """``||(XᵀX+λI)θ − Xᵀy||∞ / (1 + ||Xᵀy||∞)`` for *theta* (default: fitted)."""
        t = self.theta if theta is None else np.asarray(theta, dtype=np.float64)
        x = self.data.features
        lhs = x.T @ (x @ t) + self.lam * t
        scale = 1.0 + float(np.max(np.abs(self._xty)))
        return float(np.max(np.abs(lhs - self._xty))) / scale

    def influence(self, point: ArrayLike) -> InfluenceVector:
        """Influence vector ``z = xᵀ(XᵀX+λI)⁻¹Xᵀ`` of one test point."""
        x = np.asarray(point, dtype=np.float64)
        if x.shape != (self.data.d,):
            raise DimensionMismatch(f"test point shape {x.shape}, expected ({self.data.d},)")
        z = self.data.features @ self.solve(x)
        return InfluenceVector(z, float(z @ self.data.labels))

    def influence_matrix(self, points: ArrayLike) -> FloatArray:
        """
        Influence vectors of many test points at once.

        Parameters
        ----------
        points : array_like of shape (m, d)

        Returns
        -------
        ndarray of shape (m, n)
            Row ``j`` is ``z`` for ``points[j]``.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.data.d:
            raise DimensionMismatch(f"points shape {pts.shape}, expected (m, {self.data.d})")
        result: FloatArray = (self.data.features @ self.solve(pts.T)).T
        return result

    def coefficient_map(self) -> CoefficientMap:
        """``C = (XᵀX+λI)⁻¹Xᵀ``, so that ``C·y = θ``."""
        return CoefficientMap(self.solve(self.data.features.T))


def fit_ridge(
    data: Dataset, lam: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> RidgeModel:
    """
    Fit ridge weights by solving ``(XᵀX+λI)θ = Xᵀy``.

    Parameters
    ----------
    data : Dataset
    lam : float
        λ ≥ 0.

    Returns
    -------
    RidgeModel
    """
    return RidgeSystem(data, lam, tolerances).model


def influence(
    data: Dataset,
    lam: float,
    point: ArrayLike,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> InfluenceVector:
    """Influence vector of *point*; ``z·y`` equals the ridge prediction."""
    return RidgeSystem(data, lam, tolerances).influence(point)


def coefficient_map(
    data: Dataset, lam: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CoefficientMap:
    """The ``d × n`` coefficient map of the training set."""
    return RidgeSystem(data, lam, tolerances).coefficient_map()
