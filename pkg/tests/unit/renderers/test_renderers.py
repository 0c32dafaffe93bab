import math

import numpy as np
import pandas as pd

from label_multiplicity.certify.types import Interval, LabelKind
from label_multiplicity.renderers.markdown_report import format_rows_table, format_run_summary
from label_multiplicity.renderers.records import dumps_json, to_jsonable, write_rows_csv


def test_to_jsonable_handles_numpy_and_enums():
    obj = {"a": np.float64(1.5), "b": np.arange(3), "kind": LabelKind.BINARY, "iv": Interval(0, 1)}
    assert to_jsonable(obj) == {
        "a": 1.5, "b": [0, 1, 2], "kind": "binary", "iv": {"lo": 0.0, "hi": 1.0}
    }


def test_non_finite_becomes_null():
    assert to_jsonable(math.inf) is None
    assert dumps_json({"x": float("nan")}) == '{\n  "x": null\n}\n'


def test_keys_sorted():
    assert dumps_json({"b": 1, "a": 2}).index('"a"') < dumps_json({"b": 1, "a": 2}).index('"b"')


def test_rows_csv(tmp_path):
    path = tmp_path / "out" / "rows.csv"
    write_rows_csv(path, [{"k": 1, "rate": 0.5, "groups": ["g"]}], ["k", "rate", "groups"])
    frame = pd.read_csv(path)
    assert frame.columns.tolist() == ["k", "rate", "groups"]
    assert frame.loc[0, "groups"] == '["g"]'


def test_run_summary_mentions_rate_and_groups():
    report = {
        "config": {"mode": "exact", "task": "regression", "spec": {"name": "underpaid_salary"},
                   "k": 4, "lambda": 1.0, "epsilon": 2000.0},
        "aggregates": {
            "overall": {"count": 4, "robust": 3, "rate": 0.75},
            "groups": {"feature0_eq_1": {"count": 2, "robust": 1, "rate": 0.5}},
            "accuracy": 80.0,
        },
    }
    text = format_run_summary(report, {"fit": 0.01})
    assert "75.00%" in text
    assert "feature0_eq_1" in text
    assert "Epsilon" in text
    assert "Timing" in text


def test_rows_table_empty():
    assert "No rows." in format_rows_table("Budget sweep", [], ["k"])
