"""
Timing shape of exact versus approximate certification.

Exact certification should cost about the same per point at 1k and 10k
test points; approximate certification at 10k points should take well
under a quarter of the exact total.  Runs on synthetic data.

Usage:
    python tests/manual/manual_timing_shape.py [--train 13000] [--dim 100]
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from label_multiplicity.certify.multiplicity import materialize_spec
from label_multiplicity.certify.types import Dataset, LabelKind
from label_multiplicity.tools.config import load_bias_profile
from label_multiplicity.tools.experiment import certify_points


def _synthetic(rng: np.random.Generator, n: int, d: int, theta: np.ndarray) -> Dataset:
    features = rng.normal(size=(n, d))
    labels = np.where(features @ theta + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
    return Dataset(features, labels, LabelKind.BINARY)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--train", type=int, default=13000)
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--lam", type=float, default=10.0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    theta = rng.normal(size=args.dim)
    train = _synthetic(rng, args.train, args.dim, theta)
    spec = materialize_spec(train, load_bias_profile("binary_flip").rules, "1%")

    per_point = {}
    totals = {}
    for size in (1000, 10000):
        test = _synthetic(rng, size, args.dim, theta)
        for mode in ("exact", "approx"):
            timing: dict[str, float] = {}
            certify_points(train, args.lam, spec, test, mode, "classification", timing=timing)
            total = sum(v for k, v in timing.items() if k != "per_point_mean")
            per_point[(mode, size)] = timing["per_point_mean"]
            totals[(mode, size)] = total
            print(f"{mode:>6} {size:>6} points: total {total:.3f}s, "
                  f"per point {1e3 * timing['per_point_mean']:.3f}ms")

    linear = per_point[("exact", 10000)] / per_point[("exact", 1000)]
    share = totals[("approx", 10000)] / totals[("exact", 10000)]
    print(f"exact per-point ratio 10k/1k: {linear:.2f} (want within 3x)")
    print(f"approx/exact total at 10k: {share:.2%} (want < 25%)")
    return 0 if 1 / 3 <= linear <= 3 and share < 0.25 else 1


if __name__ == "__main__":
    sys.exit(main())
