import json
import math
from pathlib import Path

import pytest

from qgeo.output import bound_unit, column, parameter_column, records_write, tensor_unit


@pytest.mark.parametrize(
    "mu, nu, unit",
    [
        ("theta", "theta", "1/rad^2"),
        ("theta", "r", "1/rad"),
        ("r", "r", "1"),
        ("v", "k", "1/(H0*rad)"),
        ("v", "w", "1/H0^2"),
        ("a", "b", "1"),
    ],
)
def test_tensor_units(mu: str, nu: str, unit: str):
    assert tensor_unit(mu, nu) == unit


def test_bound_units_and_columns():
    assert bound_unit("theta", "theta") == "rad^2"
    assert bound_unit("v", "k") == "H0*rad"
    assert column("qmt[theta,r]", tensor_unit("theta", "r")) == "qmt[theta,r] [1/rad]"
    assert parameter_column("w") == "w [H0]"


def test_csv_keeps_every_digit(tmp_path: Path):
    path = tmp_path / "out.csv"
    records = [{"a [1]": 0.1, "b [1]": 1 / 3}, {"a [1]": 2.0, "b [1]": math.pi}]
    records_write(records, "csv", str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "a [1],b [1]"
    a, b = (float(x) for x in lines[1].split(","))
    assert a == 0.1
    assert b == 1 / 3
    assert float(lines[2].split(",")[1]) == math.pi


def test_csv_is_byte_identical_across_runs(tmp_path: Path):
    records = [{"x [rad]": 0.5 * i, "qmt[x,x] [1/rad^2]": i / 7} for i in range(10)]
    first, second = tmp_path / "1.csv", tmp_path / "2.csv"
    records_write(records, "csv", str(first))
    records_write(records, "csv", str(second))
    assert first.read_bytes() == second.read_bytes()
    assert b"\r\n" not in first.read_bytes()


def test_json_output(tmp_path: Path):
    path = tmp_path / "out.json"
    records = [{"name": "pass", "value": 1 / 3, "count": 2, "missing": math.nan}]
    records_write(records, "json", str(path))
    loaded = json.loads(path.read_text(encoding="utf-8"))
    assert loaded == [{"name": "pass", "value": 1 / 3, "count": 2, "missing": None}]


def test_explicit_column_order(capsys: pytest.CaptureFixture[str]):
    records_write([{"b": 1, "a": 2}], "csv", None, columns=["a", "b"])
    assert capsys.readouterr().out.splitlines() == ["a,b", "2,1"]


def test_stdout_and_empty_json(capsys: pytest.CaptureFixture[str]):
    records_write([], "json")
    assert capsys.readouterr().out == "[]\n"


def test_unknown_format():
    with pytest.raises(ValueError, match="format"):
        records_write([{"a": 1}], "xml")
