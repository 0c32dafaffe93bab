"""
Profile and config types for the experiment tools.

Defines the structures the CLI and the experiment harness pass around.
Named perturbation presets under ``label_multiplicity.targets`` provide
:class:`BiasProfile` instances; config files are parsed into the same
types by :mod:`label_multiplicity.tools.config`.

Classes
-------
BiasProfile : Perturbation rules, default budget and declared subgroups.
DatasetConfig : Where the data lives and how to prepare it.
SweepGrid : Budgets, regularization values and tolerance levels to sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from label_multiplicity.certify.errors import ConfigError
from label_multiplicity.certify.multiplicity import Budget, resolve_budget, rule_to_dict
from label_multiplicity.certify.types import BiasRule, FeatureCondition, LabelKind
from label_multiplicity.data.prepare import SplitPlan
from label_multiplicity.data.tabular import TabularSchema


@dataclass
class BiasProfile:
    """
    A named perturbation model.

    Attributes
    ----------
    name : str
        Short identifier (e.g. ``"binary_flip"``).
    description : str
        One-line human-readable summary.
    rules : list of BiasRule
        Evaluated in order on the raw training data, last match wins.
    k : int, float or str
        Default budget (count, fraction or ``"p%"``).
    label_kind : LabelKind or None
        Label kind the rules are written for; None accepts either.
    subgroups : dict of str to list of FeatureCondition
        Named test-set predicates; reports carry one rate per subgroup
        and one per complement.
    """

    name: str
    description: str
    rules: list[BiasRule]
    k: Budget = 1.0
    label_kind: LabelKind | None = None
    subgroups: dict[str, list[FeatureCondition]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "k": self.k,
            "label_kind": None if self.label_kind is None else self.label_kind.value,
            "rules": [rule_to_dict(r) for r in self.rules],
            "subgroups": {
                name: [[c.feature, c.op, c.threshold] for c in conditions]
                for name, conditions in self.subgroups.items()
            },
        }


@dataclass
class DatasetConfig:
    """
    Data source and preparation.

    Attributes
    ----------
    kind : {"csv", "mnist"}
    train_path : Path
        CSV file, or the MNIST training image file.
    train_labels_path : Path or None
        MNIST training label file.
    test_path : Path or None
        Separate test CSV, or the MNIST test image file.
    test_labels_path : Path or None
        MNIST test label file.
    schema : TabularSchema or None
        Required for CSV.
    split : SplitPlan or None
        Partitions a single file into train / validation / test.  With a
        separate test file only its validation fraction is used, carved
        out of the training file.
    classes : tuple of int
        MNIST digit pair, positive first.
    standardize : bool
        Standardize features with training statistics.
    intercept : bool
        Append an all-ones column after standardizing.
    """

    kind: Literal["csv", "mnist"]
    train_path: Path
    train_labels_path: Path | None = None
    test_path: Path | None = None
    test_labels_path: Path | None = None
    schema: TabularSchema | None = None
    split: SplitPlan | None = None
    classes: tuple[int, ...] = (1, 7)
    standardize: bool = True
    intercept: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("csv", "mnist"):
            raise ConfigError(f"dataset kind must be 'csv' or 'mnist', got {self.kind!r}")
        if self.kind == "csv" and self.schema is None:
            raise ConfigError("a CSV dataset needs a schema")
        if self.kind == "mnist" and self.train_labels_path is None:
            raise ConfigError("an MNIST dataset needs a training label file")
        if self.kind == "mnist" and (self.test_path is None) != (self.test_labels_path is None):
            raise ConfigError("MNIST test images and labels must be given together")
        if self.test_path is None and self.split is None:
            raise ConfigError("a dataset without a test file needs a split plan")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "train": str(self.train_path),
            "standardize": self.standardize,
            "intercept": self.intercept,
        }
        if self.train_labels_path is not None:
            out["train_labels"] = str(self.train_labels_path)
        if self.test_path is not None:
            out["test"] = str(self.test_path)
        if self.test_labels_path is not None:
            out["test_labels"] = str(self.test_labels_path)
        if self.schema is not None:
            out["schema"] = self.schema.to_dict()
        if self.split is not None:
            out["split"] = {
                "seed": self.split.seed,
                "train": self.split.train,
                "validation": self.split.validation,
                "test": self.split.test,
                "folds": self.split.folds,
            }
        if self.kind == "mnist":
            out["classes"] = list(self.classes)
        return out


@dataclass
class SweepGrid:
    """
    Grid for the sweep subcommands.

    Attributes
    ----------
    budgets : list of int, float or str
        Budgets in any form :func:`resolve_budget` accepts.
    lambdas : list of float
        Regularization values, ascending.
    epsilon : float
        Regression radius.
    tolerance_levels : list of float
        Accuracy slack in percentage points for choosing λ.
    deltas : list of float
        Half-widths ``a`` of symmetric ``[−a, a]`` label intervals.
    """

    budgets: list[Budget] = field(default_factory=lambda: [0])
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    epsilon: float = 0.0
    tolerance_levels: list[float] = field(default_factory=lambda: [0.0])
    deltas: list[float] = field(default_factory=lambda: [1.0])

    def __post_init__(self) -> None:
        for name in ("budgets", "lambdas", "tolerance_levels", "deltas"):
            if not getattr(self, name):
                raise ConfigError(f"sweep grid '{name}' must not be empty")
        for name in ("lambdas", "tolerance_levels", "deltas"):
            values = getattr(self, name)
            if list(values) != sorted(values):
                raise ConfigError(f"sweep grid '{name}' must be ascending, got {values}")
        if any(v < 0 for v in self.lambdas) or any(v <= 0 for v in self.deltas):
            raise ConfigError("lambdas must be >= 0 and deltas > 0")

    def resolved_budgets(self, n: int) -> list[int]:
        """Budgets as label counts for a training set of size *n*; must be ascending."""
        counts = [resolve_budget(k, n) for k in self.budgets]
        if counts != sorted(counts):
            raise ConfigError(f"budget grid must be ascending, resolves to {counts}")
        return counts
