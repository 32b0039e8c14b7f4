"""Readers for the result CSVs produced by the gridpool CLI.

This package talks to the simulation side through its files only; the
schemas here mirror the writer exactly.
"""

from __future__ import annotations

import csv
import math


class SchemaError(ValueError):
    """Input CSV does not carry the expected columns."""


RATES_COLUMNS = {"lambda", "L", "K", "fnr", "fpr"}
COMPARE_COLUMNS = {"method", "p", "K", "epsilon", "n", "L", "efficiency"}


def _check_columns(fieldnames, required, path):
    missing = required - set(fieldnames or ())
    if missing:
        raise SchemaError(f"{path} is missing columns: {sorted(missing)}")


def read_rates_csv(path) -> list[dict]:
    """Rows of the rates-vs-L sweep; K is int or inf, rates are floats."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, RATES_COLUMNS, path)
        for raw in reader:
            rows.append({
                "lambda": float(raw["lambda"]),
                "L": int(raw["L"]),
                "K": math.inf if raw["K"] == "inf" else int(raw["K"]),
                "fnr": float(raw["fnr"]),
                "fpr": float(raw["fpr"]),
            })
    if not rows:
        raise SchemaError(f"{path} contains no data rows")
    return rows


def read_compare_csv(path) -> list[dict]:
    """Rows of the combined comparison table; blank numeric fields become None."""

    def opt_float(text):
        return None if text in ("", None) else float(text)

    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, COMPARE_COLUMNS, path)
        for raw in reader:
            rows.append({
                "method": raw["method"],
                "p": float(raw["p"]),
                "K": opt_float(raw["K"]),
                "epsilon": opt_float(raw["epsilon"]),
                "n": None if raw["n"] in ("", None) else int(raw["n"]),
                "L": None if raw["L"] in ("", None) else int(raw["L"]),
                "efficiency": float(raw["efficiency"]),
            })
    if not rows:
        raise SchemaError(f"{path} contains no data rows")
    return rows
