"""Shared fixtures: seeded random instances and the small non-convex example."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from label_multiplicity.certify.types import (
    CoefficientMap,
    Interval,
    IntervalVector,
    MultiplicitySpec,
)
from label_multiplicity.tools.verify import RandomInstance, random_instance

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def make_instances() -> Callable[..., list[RandomInstance]]:
    """``make_instances(count, seed=0, **random_instance_kwargs)``."""

    def make(count: int, seed: int = 0, **kwargs: Any) -> list[RandomInstance]:
        rng = np.random.default_rng(seed)
        return [random_instance(rng, **kwargs) for _ in range(count)]

    return make


@pytest.fixture
def nonconvex_example() -> tuple[CoefficientMap, np.ndarray, MultiplicitySpec]:
    """Square 3x3 coefficient map, labels and a k=2 symmetric spec."""
    c = CoefficientMap(np.array([[1.0, 2.0, 1.0], [-1.0, 0.0, 2.0], [2.0, 1.0, 0.0]]))
    y = np.array([1.0, -1.0, 2.0])
    spec = MultiplicitySpec(2, IntervalVector.filled(3, Interval(-1.0, 1.0)), np.ones(3, bool))
    return c, y, spec
