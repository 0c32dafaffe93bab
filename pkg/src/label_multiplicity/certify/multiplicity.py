"""
Construction and checking of label-perturbation sets.

A perturbation set allows at most ``k`` labels to change, each within its
own delta interval, and only on samples the eligibility predicate selects.
Rules are evaluated in declaration order and the last matching rule wins;
samples no rule matches get ``Δ = [0, 0]`` and are ineligible.

Functions
---------
resolve_budget : Turn a count, fraction or percentage into a label count.
materialize_spec : Evaluate bias rules against a dataset.
targeted_rules : Rule for promoting or demoting one subgroup.
targeted_promote : Negative labels of a subgroup may flip to positive.
targeted_demote : Positive labels of a subgroup may flip to negative.
validate_witness : Check a perturbation against a spec.
witness_within_spec : Same check against a bare label vector.
witness_from_labels : Describe a perturbed label vector as a witness.
condition_from_obj : Parse one feature condition from its config form.
rule_from_dict : Parse one rule from its config form.
rule_to_dict : Serialize one rule to its config form.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike

from label_multiplicity.certify.errors import (
    BadFraction,
    DimensionMismatch,
    InvalidRule,
    InvalidSpec,
    NotBinary,
)
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    BiasRule,
    Dataset,
    FeatureCondition,
    Interval,
    IntervalVector,
    LabelKind,
    MultiplicitySpec,
    PerturbationWitness,
)

logger = logging.getLogger(__name__)

Budget = int | float | str

# floor() slack so that e.g. 0.29 * 100 resolves to 29, not 28.
_FLOOR_SLACK = 1e-9


def resolve_budget(k: Budget, n: int) -> int:
    """
    Resolve a budget to a number of labels.

    Parameters
    ----------
    k : int, float or str
        An ``int`` is a count; a ``float`` is a fraction of *n* in
        ``[0, 1]``; a string ending in ``%`` is a percentage of *n*; any
        other string is parsed as an int or float.
    n : int
        Training set size.

    Returns
    -------
    int
        ``floor(fraction · n)`` for fractional budgets.

    Raises
    ------
    BadFraction
        Fraction outside ``[0, 1]``.
    InvalidSpec
        Negative count or count above *n*.
    """
    if isinstance(k, bool):
        raise InvalidSpec(f"budget must be a number, got {k!r}")
    if isinstance(k, str):
        text = k.strip()
        if text.endswith("%"):
            try:
                percent = float(text[:-1])
            except ValueError:
                raise InvalidSpec(f"cannot parse budget {k!r}") from None
            return resolve_budget(percent / 100.0, n)
        try:
            return resolve_budget(int(text), n)
        except ValueError:
            pass
        try:
            return resolve_budget(float(text), n)
        except ValueError:
            raise InvalidSpec(f"cannot parse budget {k!r}") from None
    if isinstance(k, (int, np.integer)):
        count = int(k)
        if not 0 <= count <= n:
            raise InvalidSpec(f"budget {count} outside [0, {n}]")
        return count
    fraction = float(k)
    if math.isnan(fraction) or not 0.0 <= fraction <= 1.0:
        raise BadFraction(f"fractional budget {fraction} outside [0, 1]")
    return min(n, math.floor(fraction * n + _FLOOR_SLACK))


def materialize_spec(
    data: Dataset, rules: Sequence[BiasRule], k: Budget
) -> MultiplicitySpec:
    """
    Evaluate *rules* on *data* into a perturbation set.

    Parameters
    ----------
    data : Dataset
        Training data the rules are evaluated on (raw, before scaling).
    rules : sequence of BiasRule
        Applied in order; a later match overrides an earlier one.
    k : int, float or str
        Budget, see :func:`resolve_budget`.

    Returns
    -------
    MultiplicitySpec
    """
    lo = np.zeros(data.n)
    hi = np.zeros(data.n)
    eligible = np.zeros(data.n, dtype=bool)
    for rule in rules:
        mask = rule.matches(data)
        lo[mask] = rule.delta_template.lo
        hi[mask] = rule.delta_template.hi
        eligible |= mask
    budget = resolve_budget(k, data.n)
    logger.debug(
        "materialized %d rules: %d of %d samples eligible, k=%d",
        len(rules),
        int(eligible.sum()),
        data.n,
        budget,
    )
    return MultiplicitySpec(budget, IntervalVector(lo, hi), eligible)


def targeted_rules(
    direction: Literal["promote", "demote"],
    group_feature: int | str,
    group_value: float,
) -> list[BiasRule]:
    """
    Rule for a targeted multiplicity model over binary labels.

    ``promote`` lets subgroup members labeled −1 move to +1
    (``Δ = [0, 2]``); ``demote`` lets members labeled +1 move to −1
    (``Δ = [−2, 0]``).
    """
    condition = FeatureCondition(group_feature, "==", group_value)
    if direction == "promote":
        return [BiasRule((condition,), Interval(0.0, 2.0), label_condition=-1.0)]
    if direction == "demote":
        return [BiasRule((condition,), Interval(-2.0, 0.0), label_condition=1.0)]
    raise InvalidRule(f"targeted direction must be 'promote' or 'demote', got {direction!r}")


def _targeted(
    direction: Literal["promote", "demote"],
    data: Dataset,
    group_feature: int | str,
    group_value: float,
    k: Budget,
) -> MultiplicitySpec:
    if data.label_kind is not LabelKind.BINARY:
        raise NotBinary(f"targeted {direction} needs binary labels")
    return materialize_spec(data, targeted_rules(direction, group_feature, group_value), k)


def targeted_promote(
    data: Dataset, group_feature: int | str, group_value: float, k: Budget = 1.0
) -> MultiplicitySpec:
    """Subgroup members labeled −1 may be relabeled +1 (default budget: all)."""
    return _targeted("promote", data, group_feature, group_value, k)


def targeted_demote(
    data: Dataset, group_feature: int | str, group_value: float, k: Budget = 1.0
) -> MultiplicitySpec:
    """Subgroup members labeled +1 may be relabeled −1 (default budget: all)."""
    return _targeted("demote", data, group_feature, group_value, k)


def validate_witness(
    spec: MultiplicitySpec,
    original: Dataset,
    witness: PerturbationWitness,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    """
    Whether *witness* is a member of the perturbation set.

    Checks the budget, eligibility, interval containment of every applied
    delta, and that the resulting labels differ from the original ones
    exactly at the changed indices.

    Raises
    ------
    DimensionMismatch
        The spec, dataset and witness disagree on ``n``.
    """
    return witness_within_spec(spec, original.labels, witness, tolerances)


def witness_within_spec(
    spec: MultiplicitySpec,
    original_labels: ArrayLike,
    witness: PerturbationWitness,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    """:func:`validate_witness` against a bare label vector."""
    y = np.asarray(original_labels, dtype=np.float64)
    n = y.shape[0]
    labels = witness.resulting_labels
    if y.shape != (n,) or spec.n != n or labels.shape != (n,):
        raise DimensionMismatch(
            f"spec n={spec.n}, original labels {y.shape}, witness labels {labels.shape}"
        )
    tol = tolerances.membership
    if witness.size > spec.k:
        return False
    indices = witness.indices
    if len(set(indices)) != len(indices):
        return False
    expected = y.copy()
    for i, applied in witness.changed:
        if not 0 <= i < n or not spec.eligible[i]:
            return False
        if not spec.delta.lo[i] - tol <= applied <= spec.delta.hi[i] + tol:
            return False
        expected[i] += applied
    return bool(np.all(np.abs(labels - expected) <= tol * (1.0 + np.abs(expected))))


def witness_from_labels(
    original: ArrayLike,
    perturbed: ArrayLike,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> PerturbationWitness:
    """Witness listing every label that moved by more than the membership tolerance."""
    y = np.asarray(original, dtype=np.float64)
    y_new = np.asarray(perturbed, dtype=np.float64)
    if y.shape != y_new.shape:
        raise DimensionMismatch(f"label shapes {y.shape} and {y_new.shape} differ")
    diff = y_new - y
    moved = np.flatnonzero(np.abs(diff) > tolerances.membership * (1.0 + np.abs(y)))
    return PerturbationWitness(tuple((int(i), float(diff[i])) for i in moved), y_new)


# ---------------------------------------------------------------------------
# Config form
# ---------------------------------------------------------------------------


def condition_from_obj(obj: Any) -> FeatureCondition:
    """``[feature, op, value]`` or a mapping with the same keys; op defaults to ``==``."""
    if isinstance(obj, Mapping):
        return FeatureCondition(obj["feature"], str(obj.get("op", "==")), obj["value"])
    if isinstance(obj, Sequence) and not isinstance(obj, str) and len(obj) == 3:
        feature, op, value = obj
        return FeatureCondition(feature, str(op), value)
    raise InvalidRule(f"cannot parse feature condition {obj!r}")


def rule_from_dict(obj: Mapping[str, Any]) -> BiasRule:
    """
    Parse a rule of the form
    ``{"when": [[feature, op, value], ...], "label": -1, "delta": [lo, hi]}``.

    ``when`` and ``label`` are optional; ``feature`` is a column index or
    a column name.
    """
    try:
        delta = obj["delta"]
        template = Interval(float(delta[0]), float(delta[1]))
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise InvalidRule(f"rule needs a two-element 'delta': {obj!r}") from exc
    conditions = tuple(condition_from_obj(c) for c in obj.get("when", ()))
    label = obj.get("label")
    return BiasRule(conditions, template, None if label is None else float(label))


def rule_to_dict(rule: BiasRule) -> dict[str, Any]:
    """Inverse of :func:`rule_from_dict`."""
    out: dict[str, Any] = {
        "when": [[c.feature, c.op, c.threshold] for c in rule.feature_conditions],
        "delta": rule.delta_template.to_list(),
    }
    if rule.label_condition is not None:
        out["label"] = rule.label_condition
    return out
