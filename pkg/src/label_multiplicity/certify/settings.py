"""
Numerical tolerances shared by every module.

Functions that compare floating-point quantities take a ``tolerances``
argument defaulting to :data:`DEFAULT_TOLERANCES`, so a reproduction run
can tighten or loosen all checks from one place.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """
    Tolerance set for fits, identities and robustness decisions.

    Attributes
    ----------
    residual : float
        Relative bound on ``||(XᵀX+λI)θ - Xᵀy||∞`` for fitted models.
    identity : float
        Agreement of ``z·y`` with ``θᵀx``.
    interval : float
        Agreement of interval arithmetic with corner enumeration.
    rcond : float
        Smallest acceptable reciprocal condition number when ``λ = 0``.
    decision : float
        Absolute slack τ on the regression ε-band.
    membership : float
        Label changes smaller than this count as unchanged, and interval
        containment is checked with this slack.
    fraction_sum : float
        Allowed deviation of split fractions from 1.
    """

    residual: float = 1e-8
    identity: float = 1e-9
    interval: float = 1e-12
    rcond: float = 1e-12
    decision: float = 1e-9
    membership: float = 1e-9
    fraction_sum: float = 1e-9


DEFAULT_TOLERANCES = Tolerances()
