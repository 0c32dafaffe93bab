"""
Interval arithmetic over scalars and boxes.

Functions
---------
interval_add : Sum of two intervals (or two boxes, coordinatewise).
interval_scale : Product of an interval (or box) with a real scalar.
interval_dot : Range of ``θᵀx`` over a box of ``θ``.
interval_dot_many : :func:`interval_dot` for every row of a point matrix.
"""

from __future__ import annotations

from typing import overload

import numpy as np
from numpy.typing import ArrayLike

from label_multiplicity.certify.errors import DimensionMismatch
from label_multiplicity.certify.types import FloatArray, Interval, IntervalVector


@overload
def interval_add(a: Interval, b: Interval) -> Interval: ...


@overload
def interval_add(a: IntervalVector, b: IntervalVector) -> IntervalVector: ...


def interval_add(
    a: Interval | IntervalVector, b: Interval | IntervalVector
) -> Interval | IntervalVector:
    """``[a, b] + [a', b'] = [a + a', b + b']``, coordinatewise for boxes."""
    if isinstance(a, Interval) and isinstance(b, Interval):
        return Interval(a.lo + b.lo, a.hi + b.hi)
    if isinstance(a, IntervalVector) and isinstance(b, IntervalVector):
        if len(a) != len(b):
            raise DimensionMismatch(f"cannot add boxes of length {len(a)} and {len(b)}")
        return IntervalVector(a.lo + b.lo, a.hi + b.hi)
    raise TypeError("interval_add needs two Intervals or two IntervalVectors")


@overload
def interval_scale(a: Interval, factor: float) -> Interval: ...


@overload
def interval_scale(a: IntervalVector, factor: float) -> IntervalVector: ...


def interval_scale(
    a: Interval | IntervalVector, factor: float
) -> Interval | IntervalVector:
    """Multiply by a real scalar; a negative factor swaps the endpoints."""
    c = float(factor)
    if isinstance(a, Interval):
        x, y = a.lo * c, a.hi * c
        return Interval(min(x, y), max(x, y))
    x_arr, y_arr = a.lo * c, a.hi * c
    return IntervalVector(np.minimum(x_arr, y_arr), np.maximum(x_arr, y_arr))


def interval_dot(box: IntervalVector, x: ArrayLike) -> Interval:
    """
    Exact range of the linear form ``θ·x`` over ``θ ∈ box``.

    Parameters
    ----------
    box : IntervalVector
        Interval per coordinate of θ.
    x : array_like of shape (d,)
        Real vector.

    Returns
    -------
    Interval
        ``[Σ min(x_i·lo_i, x_i·hi_i), Σ max(x_i·lo_i, x_i·hi_i)]``.
    """
    xv = np.asarray(x, dtype=np.float64)
    if xv.shape != (len(box),):
        raise DimensionMismatch(f"vector shape {xv.shape} vs box length {len(box)}")
    at_lo = xv * box.lo
    at_hi = xv * box.hi
    return Interval(
        float(np.minimum(at_lo, at_hi).sum()),
        float(np.maximum(at_lo, at_hi).sum()),
    )


def interval_dot_many(box: IntervalVector, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """
    Apply :func:`interval_dot` to each row of *points*.

    Returns
    -------
    (ndarray, ndarray)
        Lower and upper bounds, one entry per row.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != len(box):
        raise DimensionMismatch(f"points shape {pts.shape} vs box length {len(box)}")
    at_lo = pts * box.lo
    at_hi = pts * box.hi
    return np.minimum(at_lo, at_hi).sum(axis=1), np.maximum(at_lo, at_hi).sum(axis=1)
