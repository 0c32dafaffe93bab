"""
Config file parsing and preset discovery.

Dataset configs, spec configs and CLI scalars all end up here.  Paths in
a config file are resolved relative to that file.  Every scalar flag has
an environment default ``LABEL_MULTIPLICITY_<FLAG>``; an explicit flag
always wins.

Functions
---------
load_bias_profile : Import a preset BiasProfile by name.
available_presets : Names of the shipped presets.
load_spec_profile : Preset reference or JSON spec file to BiasProfile.
profile_from_dict : Parse a spec config object.
load_dataset_config : Read a dataset config JSON file.
dataset_config_from_args : DatasetConfig from ``--data`` / ``--schema``.
env_default : Environment default for a CLI flag.
parse_list : Split a comma-separated grid.
parse_budget : Parse a budget string.
"""

from __future__ import annotations

import importlib
import json
import os
import pkgutil
from collections.abc import Callable, Mapping
from dataclasses import replace
from pathlib import Path
from typing import Any, TypeVar

from label_multiplicity.certify.errors import ConfigError, MultiplicityError
from label_multiplicity.certify.multiplicity import (
    Budget,
    condition_from_obj,
    rule_from_dict,
    targeted_rules,
)
from label_multiplicity.certify.types import LabelKind
from label_multiplicity.data.prepare import SplitPlan
from label_multiplicity.data.tabular import TabularSchema, load_schema
from label_multiplicity.tools.types import BiasProfile, DatasetConfig

ENV_PREFIX = "LABEL_MULTIPLICITY_"
PRESET_PREFIX = "preset:"

T = TypeVar("T")


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def load_bias_profile(target_name: str) -> BiasProfile:
    """
    Load a BiasProfile by preset name.

    Parameters
    ----------
    target_name : str
        Preset identifier (e.g. ``"binary_flip"``).  Maps to
        ``label_multiplicity.targets.<target_name>.bias``.

    Returns
    -------
    BiasProfile
    """
    try:
        module = importlib.import_module(f"label_multiplicity.targets.{target_name}.bias")
    except ModuleNotFoundError:
        raise ConfigError(
            f"unknown preset {target_name!r}; available: {', '.join(available_presets())}"
        ) from None
    return module.bias_profile  # type: ignore[no-any-return]


def available_presets() -> list[str]:
    """Names of the preset packages under ``label_multiplicity.targets``."""
    import label_multiplicity.targets as targets

    return sorted(m.name for m in pkgutil.iter_modules(targets.__path__) if m.ispkg)


# ---------------------------------------------------------------------------
# Spec configs
# ---------------------------------------------------------------------------


def profile_from_dict(obj: Mapping[str, Any], where: str = "<spec>") -> BiasProfile:
    """
    Parse a spec config object.

    Recognized keys: ``name``, ``description``, ``k``, ``label_kind``,
    ``rules`` (list of rule objects), ``targeted``
    (``{"direction": "promote"|"demote", "feature": ..., "value": ...}``,
    appended after ``rules``) and ``subgroups`` (name to condition list).
    A spec with no rules is valid: nothing is eligible, so every point is robust.
    """
    try:
        rules = [rule_from_dict(r) for r in obj.get("rules", [])]
        targeted = obj.get("targeted")
        if targeted is not None:
            rules.extend(
                targeted_rules(targeted["direction"], targeted["feature"], float(targeted["value"]))
            )
        kind = obj.get("label_kind")
        if targeted is not None and kind is None:
            kind = LabelKind.BINARY.value
        subgroups = {
            str(name): [condition_from_obj(c) for c in conds or ()]
            for name, conds in (obj.get("subgroups") or {}).items()
        }
    except (KeyError, TypeError, ValueError, MultiplicityError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return BiasProfile(
        name=str(obj.get("name", Path(where).stem)),
        description=str(obj.get("description", "")),
        rules=rules,
        k=obj.get("k", 1.0),
        label_kind=None if kind is None else LabelKind(kind),
        subgroups=subgroups,
    )


def load_spec_profile(spec: str) -> BiasProfile:
    """Resolve ``preset:<name>`` or read a spec JSON file."""
    if spec.startswith(PRESET_PREFIX):
        return load_bias_profile(spec[len(PRESET_PREFIX) :])
    obj = _read_json(Path(spec))
    return profile_from_dict(obj, spec)


# ---------------------------------------------------------------------------
# Dataset configs
# ---------------------------------------------------------------------------


def _read_json(path: Path) -> dict[str, Any]:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return obj


def _path(base: Path, value: Any) -> Path | None:
    if value is None:
        return None
    p = Path(str(value))
    return p if p.is_absolute() else base / p


def load_dataset_config(path: str | Path) -> DatasetConfig:
    """
    Read a dataset config.

    CSV form::

        {"kind": "csv", "train": "train.csv", "test": "test.csv",
         "schema": "schema.json" | {...}, "split": {...},
         "standardize": true, "intercept": true}

    MNIST form::

        {"kind": "mnist", "train_images": "...", "train_labels": "...",
         "test_images": "...", "test_labels": "...", "classes": [1, 7],
         "split": {"validation": 0.1, "train": 0.9, "test": 0.0}}
    """
    p = Path(path)
    obj = _read_json(p)
    base = p.parent
    kind = obj.get("kind", "csv")
    try:
        schema_obj = obj.get("schema")
        if isinstance(schema_obj, str):
            schema: TabularSchema | None = load_schema(base / schema_obj)
        elif isinstance(schema_obj, Mapping):
            schema = TabularSchema.from_dict(schema_obj)
        else:
            schema = None
        split = SplitPlan.from_dict(obj["split"]) if "split" in obj else None
        if kind == "mnist":
            train = _path(base, obj.get("train_images"))
            if train is None:
                raise ConfigError(f"{p}: MNIST config needs 'train_images'")
            return DatasetConfig(
                kind="mnist",
                train_path=train,
                train_labels_path=_path(base, obj.get("train_labels")),
                test_path=_path(base, obj.get("test_images")),
                test_labels_path=_path(base, obj.get("test_labels")),
                split=split,
                classes=tuple(int(c) for c in obj.get("classes", (1, 7))),
                standardize=bool(obj.get("standardize", True)),
                intercept=bool(obj.get("intercept", True)),
            )
        train = _path(base, obj.get("train"))
        if train is None:
            raise ConfigError(f"{p}: CSV config needs 'train'")
        return DatasetConfig(
            kind="csv",
            train_path=train,
            test_path=_path(base, obj.get("test")),
            schema=schema,
            split=split,
            standardize=bool(obj.get("standardize", True)),
            intercept=bool(obj.get("intercept", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def dataset_config_from_args(
    data: str,
    schema: str | None,
    seed: int = 0,
    intercept: bool = True,
    folds: int | None = None,
) -> DatasetConfig:
    """
    ``--data`` is a dataset config JSON, or a CSV file used with ``--schema``.

    A bare CSV is split 80/10/10 with *seed*.  *folds* switches the split
    plan to K-fold rotation.
    """
    if data.endswith(".json"):
        config = load_dataset_config(data)
    elif schema is None:
        raise ConfigError("a CSV --data file needs --schema")
    else:
        config = DatasetConfig(
            kind="csv",
            train_path=Path(data),
            schema=load_schema(schema),
            split=SplitPlan(seed=seed),
            intercept=intercept,
        )
    if folds is None:
        return config
    plan = config.split if config.split is not None else SplitPlan(seed=seed)
    return replace(config, split=replace(plan, folds=folds))


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def env_default(flag: str, fallback: T, cast: Callable[[str], T]) -> T:
    """
    ``LABEL_MULTIPLICITY_<FLAG>`` cast with *cast*, or *fallback* when unset.

    Parameters
    ----------
    flag : str
        Flag name without dashes, e.g. ``"lambda"`` or ``"budget-k"``.
    """
    name = ENV_PREFIX + flag.upper().replace("-", "_")
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return fallback
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}={raw!r}: {exc}") from exc


def parse_budget(text: str) -> Budget:
    """``"3"`` is a count, ``"0.02"`` a fraction, ``"2%"`` a percentage."""
    value = text.strip()
    if value.endswith("%"):
        return value
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"cannot parse budget {text!r}") from None


def parse_list(text: str, cast: Callable[[str], T]) -> list[T]:
    """Comma-separated values, each cast with *cast*."""
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("empty list")
    try:
        return [cast(t) for t in items]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}") from exc
