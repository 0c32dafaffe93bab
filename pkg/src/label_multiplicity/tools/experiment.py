"""
Experiment harness behind the CLI subcommands.

Perturbation rules and subgroup predicates are evaluated on the raw
(unscaled) data; the model is trained on the prepared data (standardized,
intercept appended).  Both views keep the same rows in the same order.

Classes
-------
PreparedData : Raw and prepared train / validation / test sets.

Functions
---------
load_data : Read a DatasetConfig into PreparedData.
load_folds : One PreparedData per fold rotation.
prepare : Standardize and add an intercept.
spec_for : Materialize a BiasProfile on the raw training set.
group_masks : Evaluate declared subgroups on raw rows.
certify_points : Per-point records for one (λ, spec, mode).
run_certify : Full certification run as a RunReport.
sweep_k : Robustness rate for every budget of a grid.
sweep_lambda : Accuracy and robustness per λ, plus the selected λ per tolerance.
select_lambdas : Pick λ per accuracy tolerance level.
sweep_ratio : Regression rates for symmetric label intervals of several widths.
average_over_folds : Merge per-fold sweep rows.
sweep_lambda_folds : Lambda sweep averaged over folds, then selection.
fold_summary : Per-fold and mean robustness of several certification runs.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import pandas as pd

from label_multiplicity.certify.approx import ApproxCertifier
from label_multiplicity.certify.errors import ConfigError, NotBinary, SingularSystem
from label_multiplicity.certify.exact import ExactCertifier, certify, range_for_influence
from label_multiplicity.certify.linalg import RidgeSystem
from label_multiplicity.certify.multiplicity import Budget, materialize_spec
from label_multiplicity.certify.settings import DEFAULT_TOLERANCES, Tolerances
from label_multiplicity.certify.types import (
    BoolArray,
    Dataset,
    FloatArray,
    IntervalVector,
    LabelKind,
    MultiplicitySpec,
    conditions_mask,
)
from label_multiplicity.data.mnist import load_mnist_idx
from label_multiplicity.data.prepare import (
    SplitPlan,
    StandardizationParams,
    add_intercept,
    rotate_folds,
    split,
    standardize,
)
from label_multiplicity.data.tabular import align_columns, load_csv
from label_multiplicity.tools.report import (
    NOT_ROBUST,
    ROBUST,
    UNKNOWN,
    PointRecord,
    RunReport,
    accuracy,
    rate,
)
from label_multiplicity.tools.types import BiasProfile, DatasetConfig, SweepGrid

logger = logging.getLogger(__name__)

Mode = Literal["exact", "approx"]
Task = Literal["regression", "classification"]

_CHUNK = 256


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


@dataclass
class PreparedData:
    """
    Raw and prepared views of one experiment's data.

    Attributes
    ----------
    raw_train, raw_validation, raw_test : Dataset
        As loaded; rules and subgroups are evaluated here.
    train, validation, test : Dataset
        Model inputs.
    params : StandardizationParams or None
        Recorded map, when standardizing.
    """

    raw_train: Dataset
    raw_validation: Dataset | None
    raw_test: Dataset
    train: Dataset
    validation: Dataset | None
    test: Dataset
    params: StandardizationParams | None = None


def prepare(
    raw_train: Dataset,
    raw_validation: Dataset | None,
    raw_test: Dataset,
    standardize_features: bool = True,
    intercept: bool = True,
) -> PreparedData:
    """Standardize with training statistics, then append an intercept column."""
    others = [raw_test] if raw_validation is None else [raw_validation, raw_test]
    params = None
    if standardize_features:
        train, scaled, params = standardize(raw_train, others)
    else:
        train, scaled = raw_train, list(others)
    if intercept:
        train = add_intercept(train)
        scaled = [add_intercept(d) for d in scaled]
    validation = None if raw_validation is None else scaled[0]
    return PreparedData(
        raw_train, raw_validation, raw_test, train, validation, scaled[-1], params
    )


def _carve_validation(data: Dataset, plan: SplitPlan | None) -> tuple[Dataset, Dataset | None]:
    if plan is None or plan.validation == 0.0:
        return data, None
    carve = SplitPlan(
        seed=plan.seed, train=1.0 - plan.validation, validation=plan.validation, test=0.0
    )
    parts = split(data, carve)
    return data.subset(parts.train), data.subset(parts.validation)


def _read_sources(config: DatasetConfig) -> tuple[Dataset, Dataset | None]:
    if config.kind == "mnist":
        assert config.train_labels_path is not None
        full = load_mnist_idx(config.train_path, config.train_labels_path, config.classes)
        if config.test_path is not None and config.test_labels_path is not None:
            return full, load_mnist_idx(config.test_path, config.test_labels_path, config.classes)
        return full, None
    assert config.schema is not None
    full = load_csv(config.train_path, config.schema)
    if config.test_path is None:
        return full, None
    return full, align_columns(load_csv(config.test_path, config.schema), full.feature_names)


def _log_sizes(train: Dataset, validation: Dataset | None, test: Dataset) -> None:
    logger.info(
        "data: %d train, %d validation, %d test rows, %d raw features",
        train.n,
        0 if validation is None else validation.n,
        test.n,
        train.d,
    )


def load_data(config: DatasetConfig) -> PreparedData:
    """
    Load and prepare the data a config describes.

    A single file is partitioned by the config's split plan; with a
    separate test file the plan only carves a validation set out of the
    training file.
    """
    full, test = _read_sources(config)
    if test is not None:
        train, validation = _carve_validation(full, config.split)
    else:
        assert config.split is not None
        train, validation, test = split(full, config.split).take(full)
    _log_sizes(train, validation, test)
    return prepare(train, validation, test, config.standardize, config.intercept)


def load_folds(config: DatasetConfig) -> list[PreparedData]:
    """
    One PreparedData per fold rotation of the config's split plan.

    Without ``folds`` in the plan this is ``[load_data(config)]``.
    Standardization is refit on each rotation's training set.
    """
    if config.split is None or config.split.folds is None:
        return [load_data(config)]
    full, test = _read_sources(config)
    if test is not None:
        raise ConfigError("fold rotation needs a single data file, not a separate test set")
    folds = []
    for i, parts in enumerate(rotate_folds(full, config.split)):
        train, validation, held_out = parts.take(full)
        logger.debug("fold %d of %d", i + 1, config.split.folds)
        _log_sizes(train, validation, held_out)
        folds.append(prepare(train, validation, held_out, config.standardize, config.intercept))
    return folds


def spec_for(profile: BiasProfile, raw_train: Dataset, k: Budget | None = None) -> MultiplicitySpec:
    """Materialize *profile* on the raw training rows; *k* overrides its budget."""
    if profile.label_kind is LabelKind.BINARY and raw_train.label_kind is not LabelKind.BINARY:
        raise NotBinary(f"preset {profile.name!r} needs binary labels")
    return materialize_spec(raw_train, profile.rules, profile.k if k is None else k)


def group_masks(profile: BiasProfile, raw: Dataset) -> dict[str, BoolArray]:
    return {name: conditions_mask(conds, raw) for name, conds in profile.subgroups.items()}


def _groups_per_point(masks: dict[str, BoolArray], n: int) -> list[list[str]]:
    return [[name for name, mask in masks.items() if mask[i]] for i in range(n)]


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------


def _check_task(task: Task, data: Dataset) -> None:
    if task == "classification" and data.label_kind is not LabelKind.BINARY:
        raise NotBinary("classification needs binary (±1) labels")


def _exact_records(
    certifier: ExactCertifier,
    points: FloatArray,
    labels: FloatArray,
    task: Task,
    epsilon: float,
    threads: int,
) -> list[PointRecord]:
    train_labels = certifier.data.labels

    def one(item: tuple[int, FloatArray]) -> PointRecord:
        index, z = item
        prediction = range_for_influence(z, train_labels, certifier.spec, certifier.data.label_kind)
        verdict = certify(prediction, task, epsilon, certifier.tolerances)
        return PointRecord(
            index=index,
            base=prediction.base,
            lo=prediction.range.lo,
            hi=prediction.range.hi,
            verdict=ROBUST if verdict.robust else NOT_ROBUST,
            label=float(labels[index]),
            witness=None if verdict.counterexample is None else verdict.counterexample.summary(),
        )

    records: list[PointRecord] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for start in range(0, points.shape[0], _CHUNK):
            zs = certifier.system.influence_matrix(points[start : start + _CHUNK])
            items = list(enumerate(zs, start))
            records.extend(pool.map(one, items) if pool else map(one, items))
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def _approx_records(
    certifier: ApproxCertifier,
    points: FloatArray,
    labels: FloatArray,
    task: Task,
    epsilon: float,
) -> list[PointRecord]:
    lo, hi = certifier.enclosures(points)
    robust = certifier.certify_many(points, task, epsilon)
    base = points @ certifier.box.base_theta
    return [
        PointRecord(
            index=i,
            base=float(base[i]),
            lo=float(lo[i]),
            hi=float(hi[i]),
            verdict=ROBUST if robust[i] else UNKNOWN,
            label=float(labels[i]),
        )
        for i in range(points.shape[0])
    ]


def certify_points(
    train: Dataset,
    lam: float,
    spec: MultiplicitySpec,
    test: Dataset,
    mode: Mode,
    task: Task,
    epsilon: float = 0.0,
    threads: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    system: RidgeSystem | None = None,
    timing: dict[str, float] | None = None,
) -> list[PointRecord]:
    """
    Certify every row of *test*.

    Parameters
    ----------
    train : Dataset
        Prepared training data.
    system : RidgeSystem, optional
        Reused factorization of ``(train, λ)``.
    timing : dict, optional
        Receives ``fit``, ``box_build`` (approx), ``certify`` and
        ``per_point_mean`` seconds.
    """
    _check_task(task, train)
    clock = time.perf_counter
    started = clock()
    solver = system if system is not None else RidgeSystem(train, lam, tolerances)
    fitted = clock()
    points = test.features
    if mode == "exact":
        exact = ExactCertifier(train, lam, spec, tolerances, solver)
        built = clock()
        records = _exact_records(exact, points, test.labels, task, epsilon, threads)
    elif mode == "approx":
        approx = ApproxCertifier(train, lam, spec, tolerances, solver, threads)
        built = clock()
        records = _approx_records(approx, points, test.labels, task, epsilon)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    finished = clock()
    if timing is not None:
        timing["fit"] = fitted - started
        if mode == "approx":
            timing["box_build"] = built - fitted
        timing["certify"] = finished - built
        timing["per_point_mean"] = (finished - built) / max(1, test.n)
    return records


def run_certify(
    data: PreparedData,
    profile: BiasProfile,
    lam: float,
    mode: Mode,
    task: Task,
    epsilon: float = 0.0,
    k: Budget | None = None,
    threads: int = 1,
    seed: int = 0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    dataset_echo: dict[str, Any] | None = None,
) -> RunReport:
    """
    Certify the test set and collect a RunReport.

    The report's config echoes everything that determines its contents;
    timing goes to the separate ``timing`` field.
    """
    spec = spec_for(profile, data.raw_train, k)
    timing: dict[str, float] = {}
    records = certify_points(
        data.train, lam, spec, data.test, mode, task, epsilon, threads, tolerances, timing=timing
    )
    masks = group_masks(profile, data.raw_test)
    for record, groups in zip(records, _groups_per_point(masks, data.test.n), strict=True):
        record.groups = groups
    config = {
        "dataset": dataset_echo or {},
        "spec": profile.to_dict(),
        "k": spec.k,
        "eligible": spec.eligible_count,
        "n_train": data.train.n,
        "n_test": data.test.n,
        "lambda": lam,
        "epsilon": epsilon,
        "mode": mode,
        "task": task,
        "seed": seed,
    }
    report = RunReport(config, records, list(profile.subgroups), timing)
    logger.info(
        "%s certification: %d of %d robust (k=%d, lambda=%g)",
        mode,
        sum(1 for r in records if r.robust),
        len(records),
        spec.k,
        lam,
    )
    return report


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _robust_counts_by_budget(
    train: Dataset,
    lam: float,
    spec: MultiplicitySpec,
    points: FloatArray,
    budgets: Sequence[int],
    mode: Mode,
    task: Task,
    epsilon: float,
    system: RidgeSystem,
    tolerances: Tolerances,
) -> list[int]:
    """Robust test points at each budget; exact mode sorts impacts once per point."""
    if mode == "exact":
        certifier = ExactCertifier(train, lam, spec.with_budget(max(budgets)), tolerances, system)
        breaking = certifier.breaking_budgets(points, task, epsilon)
        return [sum(1 for b in breaking if b is None or k < b) for k in budgets]
    counts = []
    for k in budgets:
        approx = ApproxCertifier(train, lam, spec.with_budget(k), tolerances, system)
        counts.append(int(approx.certify_many(points, task, epsilon).sum()))
    return counts


def sweep_k(
    data: PreparedData,
    profiles: Sequence[BiasProfile],
    grid: SweepGrid,
    lam: float,
    mode: Mode,
    task: Task,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[dict[str, Any]]:
    """
    Robustness rate per (spec, budget).

    Returns
    -------
    list of dict
        Rows with ``spec``, ``budget`` (as given), ``k``, ``count``,
        ``robust`` and ``rate``; rates are non-increasing in ``k`` per spec.
    """
    _check_task(task, data.train)
    budgets = grid.resolved_budgets(data.train.n)
    system = RidgeSystem(data.train, lam, tolerances)
    rows: list[dict[str, Any]] = []
    for profile in profiles:
        spec = spec_for(profile, data.raw_train, max(budgets))
        counts = _robust_counts_by_budget(
            data.train, lam, spec, data.test.features, budgets, mode, task,
            grid.epsilon, system, tolerances,
        )
        for given, k, robust in zip(grid.budgets, budgets, counts, strict=True):
            rows.append(
                {
                    "spec": profile.name,
                    "budget": str(given),
                    "k": k,
                    "count": data.test.n,
                    "robust": robust,
                    "rate": rate(robust, data.test.n),
                }
            )
        logger.info("swept %d budgets for spec %s", len(budgets), profile.name)
    return rows


def select_lambdas(
    rows: Sequence[dict[str, Any]], tolerance_levels: Sequence[float]
) -> list[dict[str, Any]]:
    """
    Choose λ per accuracy tolerance level.

    Among the λ whose validation accuracy is within ``t`` percentage
    points of the best, take the most robust; ties go to higher
    accuracy, then smaller λ.
    """
    scored = [
        r for r in rows if r.get("val_accuracy") is not None and r.get("val_rate") is not None
    ]
    if not scored:
        return []
    best = max(r["val_accuracy"] for r in scored)
    selections = []
    for t in tolerance_levels:
        eligible = [r for r in scored if r["val_accuracy"] >= best - t]
        chosen = min(eligible, key=lambda r: (-r["val_rate"], -r["val_accuracy"], r["lambda"]))
        selections.append({"tolerance": t, **chosen})
    return selections


def sweep_lambda(
    data: PreparedData,
    profile: BiasProfile,
    grid: SweepGrid,
    mode: Mode,
    task: Task,
    k: Budget | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """
    Accuracy and robustness rate for every λ of the grid.

    Selection uses the validation set; without one, the test set stands
    in (logged).  λ values whose system is singular are skipped.

    Returns
    -------
    (rows, selections)
    """
    _check_task(task, data.train)
    held_out = data.validation
    if held_out is None:
        logger.warning("no validation set; selecting lambda on the test set")
        held_out = data.test
    spec = spec_for(profile, data.raw_train, k)
    rows = []
    for lam in grid.lambdas:
        try:
            system = RidgeSystem(data.train, lam, tolerances)
        except SingularSystem as exc:
            logger.warning("skipping lambda=%g: %s", lam, exc)
            continue
        row: dict[str, Any] = {"lambda": lam, "k": spec.k}
        for prefix, points in (("val", held_out), ("test", data.test)):
            records = certify_points(
                data.train, lam, spec, points, mode, task, grid.epsilon,
                tolerances=tolerances, system=system,
            )
            robust = sum(1 for r in records if r.robust)
            row[f"{prefix}_accuracy"] = accuracy(records, task)
            row[f"{prefix}_rate"] = rate(robust, len(records))
        rows.append(row)
        logger.info(
            "lambda=%g: val accuracy %s, val rate %s",
            lam,
            row["val_accuracy"],
            row["val_rate"],
        )
    return rows, select_lambdas(rows, grid.tolerance_levels)


def symmetric_spec(
    n: int, half_width: float, k: int, eligible: BoolArray | None = None
) -> MultiplicitySpec:
    """Every eligible label may move within ``[−a, a]``."""
    mask = np.ones(n, dtype=bool) if eligible is None else np.asarray(eligible, dtype=bool)
    lo = np.where(mask, -half_width, 0.0)
    hi = np.where(mask, half_width, 0.0)
    return MultiplicitySpec(k, IntervalVector(lo, hi), mask)


def sweep_ratio(
    data: PreparedData,
    grid: SweepGrid,
    lam: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[dict[str, Any]]:
    """
    Regression robustness rates for ``Δ = [−a, a]`` on every label.

    Verdicts depend on ``a`` and ``ε`` only through ``a / ε``, reported
    as ``ratio`` (None when ``ε = 0``).
    """
    _check_task("regression", data.train)
    budgets = grid.resolved_budgets(data.train.n)
    system = RidgeSystem(data.train, lam, tolerances)
    rows = []
    for a in grid.deltas:
        spec = symmetric_spec(data.train.n, a, max(budgets))
        counts = _robust_counts_by_budget(
            data.train, lam, spec, data.test.features, budgets, "exact", "regression",
            grid.epsilon, system, tolerances,
        )
        for given, k, robust in zip(grid.budgets, budgets, counts, strict=True):
            rows.append(
                {
                    "delta": a,
                    "epsilon": grid.epsilon,
                    "ratio": a / grid.epsilon if grid.epsilon > 0 else None,
                    "budget": str(given),
                    "k": k,
                    "count": data.test.n,
                    "robust": robust,
                    "rate": rate(robust, data.test.n),
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Fold averaging
# ---------------------------------------------------------------------------

_SUMMED = ("count", "robust")


def average_over_folds(
    per_fold: Sequence[Sequence[dict[str, Any]]], keys: Sequence[str]
) -> list[dict[str, Any]]:
    """
    Merge sweep rows of several folds that agree on *keys*.

    ``count`` and ``robust`` are summed, other numeric columns (rates,
    accuracies, resolved budgets) averaged over the folds that produced
    the row, and ``folds`` records how many did.  A single fold is
    returned unchanged.
    """
    if len(per_fold) == 1:
        return [dict(row) for row in per_fold[0]]
    frame = pd.DataFrame(
        [{**row, "folds": i} for i, rows in enumerate(per_fold) for row in rows]
    )
    how: dict[str, str] = {}
    for column in frame.columns:
        if column in keys:
            continue
        if column == "folds":
            how[column] = "nunique"
        elif column in _SUMMED:
            how[column] = "sum"
        elif pd.api.types.is_numeric_dtype(frame[column]):
            how[column] = "mean"
        else:
            how[column] = "first"
    merged = frame.groupby(list(keys), sort=False).agg(how).reset_index()
    merged = merged.astype(object).where(merged.notna(), None)
    records: list[dict[str, Any]] = merged.to_dict(orient="records")
    return records


def sweep_lambda_folds(
    folds: Sequence[PreparedData],
    profile: BiasProfile,
    grid: SweepGrid,
    mode: Mode,
    task: Task,
    k: Budget | None = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    """:func:`sweep_lambda` on every fold; λ is selected on the fold-averaged rows."""
    per_fold = [sweep_lambda(d, profile, grid, mode, task, k, tolerances)[0] for d in folds]
    rows = average_over_folds(per_fold, ["lambda"])
    return rows, select_lambdas(rows, grid.tolerance_levels)


def fold_summary(reports: Sequence[RunReport]) -> list[dict[str, Any]]:
    """Overall robustness per fold followed by a ``mean`` row."""
    rows: list[dict[str, Any]] = [
        {"fold": i, **report.aggregates["overall"]} for i, report in enumerate(reports)
    ]
    rates = [r["rate"] for r in rows if r["rate"] is not None]
    rows.append(
        {
            "fold": "mean",
            "count": sum(r["count"] for r in rows),
            "robust": sum(r["robust"] for r in rows),
            "rate": float(np.mean(rates)) if rates else None,
        }
    )
    return rows
