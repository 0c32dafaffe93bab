"""
Robustness rates on MNIST 1/7 for small label-flip budgets.

Needs the four standard MNIST IDX files and a dataset config pointing at
them (see docs/config-reference.md).  Not collected by pytest.

Usage:
    python tests/manual/manual_mnist17_reproduce.py data/mnist17.json
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from label_multiplicity.tools.config import load_bias_profile, load_dataset_config
from label_multiplicity.tools.experiment import load_data, sweep_k, sweep_lambda
from label_multiplicity.tools.types import SweepGrid

BUDGETS = ["0.1%", "0.25%", "0.5%", "0.75%", "1.0%"]
EXPECTED = [98.3, 96.3, 93.1, 88.3, 84.4]
ALLOWED_GAP = 5.0
LAMBDAS = [1.0, 10.0, 100.0, 1000.0, 10000.0]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("config", help="Dataset config JSON for MNIST 1/7")
    parser.add_argument("--mode", choices=["exact", "approx"], default="exact")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    started = time.perf_counter()
    data = load_data(load_dataset_config(args.config))
    print(f"Loaded {data.train.n} training samples, {data.test.n} test samples")
    profile = load_bias_profile("binary_flip")

    _, selections = sweep_lambda(
        data, profile, SweepGrid(lambdas=LAMBDAS), args.mode, "classification", k=0
    )
    lam = float(selections[0]["lambda"])
    print(f"Selected lambda={lam} (validation accuracy {selections[0]['val_accuracy']:.2f})")

    rows = sweep_k(
        data, [profile], SweepGrid(budgets=BUDGETS), lam, args.mode, "classification"
    )
    failed = 0
    for row, expected in zip(rows, EXPECTED, strict=True):
        got = 100.0 * row["rate"]
        ok = abs(got - expected) <= ALLOWED_GAP
        failed += not ok
        print(f"{row['budget']:>6}  k={row['k']:<4} rate={got:5.1f}%  expected {expected}%  "
              f"{'ok' if ok else 'OFF'}")
    print(f"Finished in {time.perf_counter() - started:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
