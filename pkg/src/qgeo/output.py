"""
Tabular output. Every column name carries its unit in brackets, e.g. `qmt[theta,r] [1/rad]`,
and floats are written with 17 significant digits so identical runs give identical bytes.
"""

import json
import math
import sys
from collections import Counter
from collections.abc import Mapping, Sequence

import pandas as pd

Record = Mapping[str, object]

FLOAT_FORMAT = "%.17g"

PARAMETER_UNITS = {
    "theta": "rad",
    "phi": "rad",
    "k": "rad",
    "r": "1",
    "v": "H0",
    "w": "H0",
}


def parameter_unit(name: str) -> str:
    return PARAMETER_UNITS.get(name, "1")


def _product(names: Sequence[str]) -> str:
    counts = Counter(parameter_unit(name) for name in names)
    counts.pop("1", None)
    if not counts:
        return "1"
    return "*".join(unit if n == 1 else f"{unit}^{n}" for unit, n in sorted(counts.items()))


def tensor_unit(mu: str, nu: str) -> str:
    """
    Unit of a metric, curvature or Fisher entry over (μ, ν): 1/(u_μ·u_ν).
    """

    product = _product([mu, nu])
    if product == "1":
        return "1"
    return f"1/{product}" if "*" not in product else f"1/({product})"


def bound_unit(mu: str, nu: str) -> str:
    return _product([mu, nu])


def column(label: str, unit: str) -> str:
    return f"{label} [{unit}]"


def parameter_column(name: str) -> str:
    return column(name, parameter_unit(name))


def records_write(
    records: Sequence[Record],
    fmt: str,
    path: str | None = None,
    columns: Sequence[str] | None = None,
) -> None:
    """
    Writes `records` as CSV or JSON to `path`, or to stdout when it is None. Column order is
    `columns` if given, else the key order of the first record.
    """

    order = list(columns) if columns is not None else list(records[0]) if records else []
    match fmt:
        case "csv":
            frame = pd.DataFrame.from_records(list(records), columns=order)
            target = path if path is not None else sys.stdout
            frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        case "json":
            text = _json_dump(records, order)
            if path is None:
                sys.stdout.write(text)
            else:
                with open(path, "w", encoding="utf-8", newline="\n") as f:
                    f.write(text)
        case _:
            raise ValueError(f"unknown output format '{fmt}'")


def _json_value(value: object) -> str:
    match value:
        case bool() | None:
            return json.dumps(value)
        case int():
            return str(value)
        case float():
            return format(value, ".17g") if math.isfinite(value) else "null"
        case _:
            return json.dumps(str(value) if not isinstance(value, str) else value)


def _json_dump(records: Sequence[Record], order: Sequence[str]) -> str:
    rows = [
        "  {" + ", ".join(f"{json.dumps(key)}: {_json_value(row.get(key))}" for key in order) + "}"
        for row in records
    ]
    return "[\n" + ",\n".join(rows) + "\n]\n" if rows else "[]\n"
