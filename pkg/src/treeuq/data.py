"""Tabular dataset container and CSV ingestion.

Features are a dense float64 matrix; missing cells are encoded as NaN.
Targets must be finite. CSV files are plain comma-separated with a
header row; empty feature cells become NaN, empty target cells are an
error.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ParseError

MISSING = np.nan


@dataclass(frozen=True)
class Dataset:
    """An n x p feature matrix plus length-n targets.

    Invariants: n >= 1, p >= 1, every row has p entries, targets are
    finite (no NaN/inf). Missing feature values are NaN.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: list[str] | None = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidInputError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError(f"need n >= 1 and p >= 1, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise InvalidInputError(
                f"targets must be length-{X.shape[0]} 1-D, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise InvalidInputError("targets contain non-finite values")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise InvalidInputError("feature_names length does not match p")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        """New Dataset restricted to the given row indices."""
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.targets[idx], self.feature_names)


def _parse_cell(text: str, row: int, col: int) -> float:
    if text.strip() == "":
        return MISSING
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"cell {text!r} is not numeric", line=row, column=col) from None


def load_csv(path, target_column: str) -> Dataset:
    """Read a headed CSV into a Dataset.

    Every cell must parse as a float; empty feature cells become NaN,
    an empty or missing target cell raises. The target column is
    removed from the feature matrix.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise InvalidInputError(
                f"target column {target_column!r} not in header {header}")
        t_idx = header.index(target_column)
        feat_names = [h for i, h in enumerate(header) if i != t_idx]

        rows, targets = [], []
        for r, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ParseError(
                    f"expected {len(header)} cells, got {len(rec)}", line=r)
            cells = [_parse_cell(c, r, i + 1) for i, c in enumerate(rec)]
            t = cells.pop(t_idx)
            if not np.isfinite(t):
                raise InvalidInputError(f"missing or non-finite target at line {r}")
            rows.append(cells)
            targets.append(t)

    if not rows:
        raise InvalidInputError("no data rows in file")
    if len(feat_names) == 0:
        raise InvalidInputError("no feature columns besides the target")
    return Dataset(np.array(rows, dtype=np.float64),
                   np.array(targets, dtype=np.float64), feat_names)


def save_csv(path, data: Dataset, target_column: str = "target") -> None:
    """Write a Dataset back to CSV; inverse of load_csv.

    Finite values are written with 17 significant digits so the
    round trip is bit-exact; NaN features become empty cells.
    """
    names = data.feature_names or [f"x{i}" for i in range(data.p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [target_column])
        for i in range(data.n):
            row = ["" if np.isnan(v) else format(v, ".17g") for v in data.features[i]]
            row.append(format(data.targets[i], ".17g"))
            writer.writerow(row)
