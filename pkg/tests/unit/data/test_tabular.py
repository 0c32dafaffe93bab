import numpy as np
import pytest

from label_multiplicity.certify.errors import ConfigError, ParseError, SchemaMismatch
from label_multiplicity.certify.types import Dataset, LabelKind
from label_multiplicity.data.tabular import (
    TabularSchema,
    align_columns,
    load_csv,
    load_schema,
    write_csv,
)


def test_three_row_file(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("a,b,y\n1,2,0.5\n3,4,1.5\n5,6,2.5\n", encoding="utf-8")
    data = load_csv(path, TabularSchema("y"))
    np.testing.assert_array_equal(data.features, [[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(data.labels, [0.5, 1.5, 2.5])
    assert data.feature_names == ("a", "b")
    assert data.label_kind is LabelKind.REGRESSION


def test_salary_fixture_one_hot(fixtures_dir):
    schema = load_schema(fixtures_dir / "salary_schema.json")
    data = load_csv(fixtures_dir / "salary.csv", schema)
    assert data.n == 20
    # "eng" is the dropped reference category.
    assert data.feature_names == ("group", "years", "dept_ops", "dept_sales")
    assert data.features[2].tolist() == [1.0, 7.0, 1.0, 0.0]
    assert data.features[0].tolist() == [1.0, 2.0, 0.0, 0.0]


def test_binary_mapping(fixtures_dir):
    schema = load_schema(fixtures_dir / "loans_schema.json")
    data = load_csv(fixtures_dir / "loans.csv", schema)
    assert data.label_kind is LabelKind.BINARY
    assert data.labels[:3].tolist() == [-1.0, 1.0, 1.0]


def test_unmapped_label(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,yes\n2,maybe\n", encoding="utf-8")
    schema = TabularSchema("y", positive=("yes",), negative=("no",))
    with pytest.raises(SchemaMismatch, match=":3"):
        load_csv(path, schema)


def test_parse_error_is_located(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n3,4\nabc,5\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        load_csv(path, TabularSchema("y"))
    assert excinfo.value.row == 4
    assert excinfo.value.column == "x"


def test_invalid_utf8_is_located(tmp_path):
    path = tmp_path / "latin.csv"
    path.write_bytes(b"x0,y\n1.0,2.0\n\xff\xfe,3.0\n")
    with pytest.raises(ParseError, match="UTF-8") as excinfo:
        load_csv(path, TabularSchema("y"))
    assert excinfo.value.row == 3
    assert "latin.csv" in str(excinfo.value)


def test_header_mismatch(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("x,z\n1,2\n", encoding="utf-8")
    with pytest.raises(SchemaMismatch):
        load_csv(path, TabularSchema("y"))
    with pytest.raises(SchemaMismatch):
        load_csv(path, TabularSchema("z", columns=("z", "x")))


def test_schema_validation():
    with pytest.raises(ConfigError):
        TabularSchema("y", positive=("a",))
    with pytest.raises(ConfigError):
        TabularSchema("y", positive=("a",), negative=("a",))
    with pytest.raises(ConfigError):
        TabularSchema("y", columns=("a", "b"))


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    original = Dataset(
        rng.normal(size=(8, 3)) * 1e3, rng.normal(size=8), feature_names=("p", "q", "r")
    )
    path = tmp_path / "rt.csv"
    write_csv(path, original)
    back = load_csv(path, TabularSchema("target"))
    np.testing.assert_allclose(back.features, original.features, rtol=0, atol=1e-12 * 1e3)
    np.testing.assert_allclose(back.labels, original.labels, rtol=0, atol=1e-12)
    assert back.feature_names == original.feature_names


def test_align_columns():
    data = Dataset(np.array([[1.0, 2.0]]), np.array([0.0]), feature_names=("a", "c_x"))
    aligned = align_columns(data, ("c_y", "a"))
    assert aligned.feature_names == ("c_y", "a")
    assert aligned.features.tolist() == [[0.0, 1.0]]
