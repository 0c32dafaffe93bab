"""
Command-line front end.

Subcommands
-----------
certify : Certify a test set exactly or approximately; writes
    ``<out>.json``, ``<out>.timing.json``, ``<out>.csv`` and ``<out>.md``.
    With ``--folds K`` each rotation writes ``<out>.fold<i>.*`` and the
    per-fold rates go to ``<out>.folds.csv``; the sweeps average over folds.
sweep-k : Robustness rate per budget (one curve per ``--spec``); ``<out>.csv``.
sweep-lambda : Accuracy and robustness per λ plus the selected λ per
    tolerance level; ``<out>.csv`` and ``<out>.selection.csv``.
sweep-ratio : Regression rates for symmetric label intervals; ``<out>.csv``.
verify : Greedy certifiers against the brute-force oracle.

Exit codes: 0 success, 1 usage or config error, 2 verification failure,
3 IO error.  Scalar flags default to ``LABEL_MULTIPLICITY_<FLAG>`` from the
environment.

Examples
--------
::

    label-multiplicity certify \\
        --data data/mnist17.json --spec preset:binary_flip \\
        --budget-k 1.0% --lambda 1000 --task classification --out tmp/mnist17

    python -m label_multiplicity.tools.cli verify --random-instances 50
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

from label_multiplicity.certify.errors import (
    ConfigError,
    DataError,
    MultiplicityError,
)
from label_multiplicity.certify.types import EnumerationBudget, LabelKind
from label_multiplicity.renderers.markdown_report import format_rows_table, format_run_summary
from label_multiplicity.renderers.records import write_json, write_rows_csv
from label_multiplicity.tools.config import (
    dataset_config_from_args,
    env_default,
    load_spec_profile,
    parse_budget,
    parse_list,
)
from label_multiplicity.tools.experiment import (
    PreparedData,
    average_over_folds,
    fold_summary,
    load_data,
    load_folds,
    run_certify,
    spec_for,
    sweep_k,
    sweep_lambda_folds,
    sweep_ratio,
)
from label_multiplicity.tools.report import RunReport
from label_multiplicity.tools.types import DatasetConfig, SweepGrid
from label_multiplicity.tools.verify import RandomInstance, verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_IO = 3

_POINT_COLUMNS = ["index", "base", "lo", "hi", "verdict", "label", "groups"]
_FOLD_COLUMNS = ["fold", "count", "robust", "rate"]


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the config/usage code instead of argparse's 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"ERROR: {message}\n")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--data",
        default=env_default("data", None, str),
        help="Dataset config JSON, or a CSV file together with --schema.",
    )
    p.add_argument(
        "--schema", default=env_default("schema", None, str), help="Schema JSON for a CSV --data."
    )
    p.add_argument(
        "--no-intercept",
        action="store_true",
        help="Do not append an all-ones column (CSV --data only).",
    )
    p.add_argument(
        "--seed", type=int, default=env_default("seed", 0, int), help="Split and sampling seed."
    )
    p.add_argument(
        "--folds",
        type=int,
        default=env_default("folds", None, int),
        help="Rotate K folds (fold i test, i+1 validation) and average the rates.",
    )


def _add_model_args(p: argparse.ArgumentParser, spec_repeatable: bool = False) -> None:
    if spec_repeatable:
        p.add_argument(
            "--spec",
            action="append",
            default=None,
            help="Spec JSON file or preset:<name>; repeat for several curves.",
        )
    else:
        p.add_argument(
            "--spec",
            default=env_default("spec", None, str),
            help="Spec JSON file or preset:<name>.",
        )
    p.add_argument(
        "--task",
        choices=["regression", "classification"],
        default=env_default("task", None, str),
        help="Default: classification for binary labels, regression otherwise.",
    )
    p.add_argument("--epsilon", type=float, default=env_default("epsilon", 0.0, float))
    p.add_argument(
        "--budget-k",
        default=env_default("budget-k", None, str),
        help="Budget override: count, fraction or percentage (e.g. 1.0%%).",
    )
    p.add_argument("--threads", type=int, default=env_default("threads", 1, int))


def _add_out_arg(p: argparse.ArgumentParser, required: bool = True) -> None:
    default = env_default("out", None, str)
    p.add_argument(
        "--out",
        required=required and default is None,
        default=default,
        help="Output path prefix; suffixes are appended.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="label-multiplicity",
        description="Certify ridge-model predictions against training-label multiplicity.",
    )
    parser.add_argument(
        "--log-level",
        default=env_default("log-level", "INFO", str),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", help="Certify every test point.")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=env_default("lambda", 1.0, float))
    p.add_argument("--mode", choices=["exact", "approx"], default=env_default("mode", "exact", str))
    _add_out_arg(p)

    p = sub.add_parser("sweep-k", help="Robustness rate along a budget grid.")
    _add_data_args(p)
    _add_model_args(p, spec_repeatable=True)
    p.add_argument("--lambda", dest="lam", type=float, default=env_default("lambda", 1.0, float))
    p.add_argument("--mode", choices=["exact", "approx"], default=env_default("mode", "exact", str))
    p.add_argument("--grid", required=True, help="Comma-separated budgets, e.g. 0,0.1%%,1%%.")
    _add_out_arg(p)

    p = sub.add_parser("sweep-lambda", help="Accuracy/robustness tradeoff along a lambda grid.")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--mode", choices=["exact", "approx"], default=env_default("mode", "exact", str))
    p.add_argument("--lambdas", required=True, help="Comma-separated ascending lambdas.")
    p.add_argument(
        "--tolerances",
        default="0",
        help="Comma-separated accuracy slack levels in percentage points.",
    )
    _add_out_arg(p)

    p = sub.add_parser("sweep-ratio", help="Regression rates for symmetric label intervals.")
    _add_data_args(p)
    p.add_argument("--epsilon", type=float, default=env_default("epsilon", 1.0, float))
    p.add_argument("--lambda", dest="lam", type=float, default=env_default("lambda", 1.0, float))
    p.add_argument("--deltas", required=True, help="Comma-separated interval half-widths.")
    p.add_argument("--grid", required=True, help="Comma-separated budgets.")
    _add_out_arg(p)

    p = sub.add_parser("verify", help="Cross-check against the brute-force oracle.")
    p.add_argument("--data", default=None, help="Optional small dataset to verify.")
    p.add_argument("--schema", default=None)
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--spec", default=None)
    p.add_argument("--budget-k", default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=env_default("lambda", 1.0, float))
    p.add_argument("--seed", type=int, default=env_default("seed", 0, int))
    p.add_argument("--random-instances", type=int, default=0)
    p.add_argument("--max-n", type=int, default=EnumerationBudget.max_n)
    p.add_argument("--max-k", type=int, default=EnumerationBudget.max_k)
    p.add_argument("--max-evaluations", type=int, default=EnumerationBudget.max_evaluations)
    _add_out_arg(p, required=False)
    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _config(args: argparse.Namespace, folds: int | None = None) -> DatasetConfig:
    if not args.data:
        raise ConfigError("--data is required")
    return dataset_config_from_args(
        args.data, args.schema, args.seed, not args.no_intercept, folds
    )


def _load(args: argparse.Namespace) -> tuple[PreparedData, dict[str, Any]]:
    config = _config(args)
    data = load_data(config)
    print(f"Loaded {data.train.n} training samples, {data.test.n} test samples")
    return data, config.to_dict()


def _load_folds(args: argparse.Namespace) -> tuple[list[PreparedData], dict[str, Any]]:
    config = _config(args, args.folds)
    folds = load_folds(config)
    if len(folds) > 1:
        print(f"Loaded {len(folds)} folds, {folds[0].train.n} training samples in the first")
    else:
        print(f"Loaded {folds[0].train.n} training samples, {folds[0].test.n} test samples")
    return folds, config.to_dict()


def _task(args: argparse.Namespace, data: PreparedData) -> str:
    if args.task:
        return str(args.task)
    return "classification" if data.train.label_kind is LabelKind.BINARY else "regression"


def _budget(args: argparse.Namespace) -> Any:
    return None if args.budget_k is None else parse_budget(args.budget_k)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_report(out: Path, report: RunReport) -> dict[str, Any]:
    body = report.to_dict()
    write_json(out.with_name(out.name + ".json"), body)
    write_json(out.with_name(out.name + ".timing.json"), report.timing)
    write_rows_csv(
        out.with_name(out.name + ".csv"),
        [p.to_dict() for p in report.points],
        _POINT_COLUMNS,
    )
    _write_text(out.with_name(out.name + ".md"), format_run_summary(body, report.timing))
    return body


def cmd_certify(args: argparse.Namespace) -> int:
    if not args.spec:
        raise ConfigError("--spec is required")
    folds, echo = _load_folds(args)
    profile = load_spec_profile(args.spec)
    task = _task(args, folds[0])
    reports = [
        run_certify(
            data,
            profile,
            args.lam,
            args.mode,
            task,  # type: ignore[arg-type]
            args.epsilon,
            _budget(args),
            args.threads,
            args.seed,
            dataset_echo=echo,
        )
        for data in folds
    ]
    out = Path(args.out)
    if len(reports) == 1:
        overall = _write_report(out, reports[0])["aggregates"]["overall"]
        print(f"Robust: {overall['robust']} of {overall['count']} ({overall['rate']})")
        print(f"Report written to {out}.json")
        return EXIT_OK
    for i, report in enumerate(reports):
        _write_report(out.with_name(f"{out.name}.fold{i}"), report)
    summary = fold_summary(reports)
    write_rows_csv(out.with_name(out.name + ".folds.csv"), summary, _FOLD_COLUMNS)
    print(f"Mean robustness over {len(reports)} folds: {summary[-1]['rate']}")
    print(f"Fold summary written to {out}.folds.csv")
    return EXIT_OK


def cmd_sweep_k(args: argparse.Namespace) -> int:
    fallback = env_default("spec", None, str)
    specs = args.spec or ([fallback] if fallback else [])
    if not specs:
        raise ConfigError("at least one --spec is required")
    folds, _ = _load_folds(args)
    profiles = [load_spec_profile(s) for s in specs]
    grid = SweepGrid(budgets=parse_list(args.grid, parse_budget), epsilon=args.epsilon)
    task = _task(args, folds[0])
    per_fold = [
        sweep_k(data, profiles, grid, args.lam, args.mode, task)  # type: ignore[arg-type]
        for data in folds
    ]
    rows = average_over_folds(per_fold, ["spec", "budget"])
    out = Path(args.out)
    columns = ["spec", "budget", "k", "count", "robust", "rate"]
    if len(folds) > 1:
        columns.append("folds")
    write_rows_csv(out.with_name(out.name + ".csv"), rows, columns)
    _write_text(out.with_name(out.name + ".md"), format_rows_table("Budget sweep", rows, columns))
    print(f"Curve written to {out}.csv")
    return EXIT_OK


def cmd_sweep_lambda(args: argparse.Namespace) -> int:
    if not args.spec:
        raise ConfigError("--spec is required")
    folds, _ = _load_folds(args)
    profile = load_spec_profile(args.spec)
    grid = SweepGrid(
        lambdas=parse_list(args.lambdas, float),
        tolerance_levels=parse_list(args.tolerances, float),
        epsilon=args.epsilon,
    )
    task = _task(args, folds[0])
    rows, selections = sweep_lambda_folds(
        folds, profile, grid, args.mode, task, _budget(args)  # type: ignore[arg-type]
    )
    out = Path(args.out)
    columns = ["lambda", "k", "val_accuracy", "val_rate", "test_accuracy", "test_rate"]
    if len(folds) > 1:
        columns.append("folds")
    write_rows_csv(out.with_name(out.name + ".csv"), rows, columns)
    write_rows_csv(
        out.with_name(out.name + ".selection.csv"), selections, ["tolerance", *columns]
    )
    for s in selections:
        print(
            f"tolerance {s['tolerance']}: lambda={s['lambda']} "
            f"test accuracy={s['test_accuracy']} test rate={s['test_rate']}"
        )
    print(f"Sweep written to {out}.csv")
    return EXIT_OK


def cmd_sweep_ratio(args: argparse.Namespace) -> int:
    folds, _ = _load_folds(args)
    grid = SweepGrid(
        budgets=parse_list(args.grid, parse_budget),
        deltas=parse_list(args.deltas, float),
        epsilon=args.epsilon,
    )
    per_fold = [sweep_ratio(data, grid, args.lam) for data in folds]
    rows = average_over_folds(per_fold, ["delta", "budget"])
    out = Path(args.out)
    columns = ["delta", "epsilon", "ratio", "budget", "k", "count", "robust", "rate"]
    if len(folds) > 1:
        columns.append("folds")
    write_rows_csv(out.with_name(out.name + ".csv"), rows, columns)
    print(f"Sweep written to {out}.csv")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    budget = EnumerationBudget(args.max_n, args.max_k, args.max_evaluations)
    instance = None
    if args.data:
        if not args.spec:
            raise ConfigError("verifying --data needs --spec")
        data, _ = _load(args)
        spec = spec_for(load_spec_profile(args.spec), data.raw_train, _budget(args))
        instance = RandomInstance(data.train, spec, args.lam, data.test.features)
    elif args.random_instances <= 0:
        raise ConfigError("nothing to verify: give --data or --random-instances")
    result = verify(instance, args.random_instances, args.seed, budget)
    if args.out:
        out = Path(args.out)
        write_json(
            out.with_name(out.name + ".json"),
            {"checked": result.checked, "mismatches": result.mismatches, "ok": result.ok},
        )
    for mismatch in result.mismatches:
        print(f"MISMATCH: {mismatch}", file=sys.stderr)
    if not result.ok:
        print(f"FAIL: {len(result.mismatches)} of {result.checked} checks failed", file=sys.stderr)
        return EXIT_VERIFY
    print(f"PASS: {result.checked} checks")
    return EXIT_OK


_COMMANDS = {
    "certify": cmd_certify,
    "sweep-k": cmd_sweep_k,
    "sweep-lambda": cmd_sweep_lambda,
    "sweep-ratio": cmd_sweep_ratio,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one subcommand, return its exit code."""
    try:
        parser = build_parser()
    except ConfigError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, MultiplicityError, DataError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
