"""Reader for the mbmlink CSV contract.

Expected header (UTF-8, LF, '.' decimals):
    experiment,snr_db,subset,estimator,rate_bits,std_error_bits,
    lower_bound_bits,upper_bound_bits,realizations,seed
Numeric fields may be empty (bounds on rows where they do not apply).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass


class MissingColumnError(ValueError):
    def __init__(self, column: str, path: str):
        self.column = column
        super().__init__(f"column {column!r} missing from {path}")


class EmptyCsvError(ValueError):
    pass


REQUIRED_COLUMNS = ("experiment", "snr_db", "subset", "estimator", "rate_bits",
                    "std_error_bits", "lower_bound_bits", "upper_bound_bits",
                    "realizations", "seed")


@dataclass(frozen=True)
class DataRow:
    experiment: str
    snr_db: float | None
    subset: str
    estimator: str
    rate_bits: float
    std_error_bits: float
    lower_bound_bits: float | None
    upper_bound_bits: float | None


def _opt_float(raw: str) -> float | None:
    raw = raw.strip()
    return float(raw) if raw else None


def read_rows(path: str) -> list[DataRow]:
    """Parse one CSV file; raises for a bad header or an empty body."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise MissingColumnError(column, path)
        rows = []
        for rec in reader:
            rows.append(DataRow(
                experiment=rec["experiment"],
                snr_db=_opt_float(rec["snr_db"]),
                subset=rec["subset"],
                estimator=rec["estimator"],
                rate_bits=float(rec["rate_bits"]),
                std_error_bits=float(rec["std_error_bits"] or 0.0),
                lower_bound_bits=_opt_float(rec["lower_bound_bits"]),
                upper_bound_bits=_opt_float(rec["upper_bound_bits"]),
            ))
    if not rows:
        raise EmptyCsvError(f"{path} has a header but no data rows")
    return rows
