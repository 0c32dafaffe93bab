"""
Run reports: per-point records and their aggregates.

Aggregates are always recomputed from the per-point records, so a report
read back from JSON reproduces its headline rates exactly.

Classes
-------
PointRecord : Outcome for one test point.
RunReport : Config echo, records, aggregates, timing.

Functions
---------
rate : Robust fraction of a count.
aggregate : Overall and per-subgroup rates from records.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

ROBUST = "Robust"
NOT_ROBUST = "NotRobust"
UNKNOWN = "Unknown"


@dataclass
class PointRecord:
    """
    Certification outcome for one test point.

    Attributes
    ----------
    index : int
        Row of the test set.
    base : float
        Prediction on the unmodified training labels.
    lo, hi : float
        Exact prediction range, or the box enclosure in approximate mode.
    verdict : str
        ``Robust``, ``NotRobust`` or ``Unknown``.
    label : float
        True test label.
    groups : list of str
        Declared subgroups containing the point.
    witness : dict or None
        Summary of the counterexample for NotRobust points.
    """

    index: int
    base: float
    lo: float
    hi: float
    verdict: str
    label: float
    groups: list[str] = field(default_factory=list)
    witness: dict[str, Any] | None = None

    @property
    def robust(self) -> bool:
        return self.verdict == ROBUST

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "base": self.base,
            "lo": self.lo,
            "hi": self.hi,
            "verdict": self.verdict,
            "label": self.label,
            "groups": list(self.groups),
            "witness": self.witness,
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> PointRecord:
        return cls(
            index=int(obj["index"]),
            base=float(obj["base"]),
            lo=float(obj["lo"]),
            hi=float(obj["hi"]),
            verdict=str(obj["verdict"]),
            label=float(obj["label"]),
            groups=[str(g) for g in obj.get("groups", [])],
            witness=obj.get("witness"),
        )


def rate(robust: int, count: int) -> float | None:
    """``robust / count``; None for an empty set."""
    return robust / count if count else None


def _summary(records: Sequence[PointRecord]) -> dict[str, Any]:
    robust = sum(1 for r in records if r.robust)
    return {"count": len(records), "robust": robust, "rate": rate(robust, len(records))}


def accuracy(records: Sequence[PointRecord], task: str) -> float | None:
    """
    Percentage accuracy of the base predictions.

    Classification counts sign agreement (a zero prediction is class −1);
    regression reports ``100 · R²``.
    """
    if not records:
        return None
    if task == "classification":
        hits = sum(1 for r in records if (1.0 if r.base > 0 else -1.0) == r.label)
        return 100.0 * hits / len(records)
    labels = [r.label for r in records]
    mean = sum(labels) / len(labels)
    total = sum((v - mean) ** 2 for v in labels)
    residual = sum((r.label - r.base) ** 2 for r in records)
    if total == 0.0:
        return None
    return 100.0 * (1.0 - residual / total)


def aggregate(
    records: Sequence[PointRecord], group_names: Sequence[str], task: str
) -> dict[str, Any]:
    """
    Overall rate, one rate per subgroup and one per complement.

    The complement of group ``g`` is reported as ``not g``; each pair
    partitions the test set, so their counts sum to the overall count.
    """
    groups: dict[str, Any] = {}
    for name in group_names:
        inside = [r for r in records if name in r.groups]
        outside = [r for r in records if name not in r.groups]
        groups[name] = _summary(inside)
        groups[f"not {name}"] = _summary(outside)
    return {
        "overall": _summary(records),
        "groups": groups,
        "accuracy": accuracy(records, task),
    }


@dataclass
class RunReport:
    """
    One certification run.

    Attributes
    ----------
    config : dict
        Dataset, spec, λ, ε, mode, task and seed as run.
    points : list of PointRecord
    group_names : list of str
        Declared subgroups, in config order.
    timing : dict of str to float
        Wall-clock seconds per phase; kept out of :meth:`to_dict`.
    """

    config: dict[str, Any]
    points: list[PointRecord]
    group_names: list[str] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def aggregates(self) -> dict[str, Any]:
        return aggregate(self.points, self.group_names, str(self.config.get("task")))

    @property
    def robustness_rate(self) -> float | None:
        rate_value: float | None = self.aggregates["overall"]["rate"]
        return rate_value

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "group_names": list(self.group_names),
            "aggregates": self.aggregates,
            "points": [p.to_dict() for p in self.points],
        }

    @classmethod
    def from_dict(
        cls, obj: Mapping[str, Any], timing: Mapping[str, float] | None = None
    ) -> RunReport:
        return cls(
            config=dict(obj["config"]),
            points=[PointRecord.from_dict(p) for p in obj["points"]],
            group_names=[str(g) for g in obj.get("group_names", [])],
            timing=dict(timing or {}),
        )
