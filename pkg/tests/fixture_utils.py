"""Readers for the committed fixture layout."""
import csv
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).parent.parent / "fixtures"


def read_inputs(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        rows = [[np.nan if c == "" else float(c) for c in rec]
                for rec in reader]
    return np.array(rows, dtype=np.float64)


def read_predictions(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([float(rec[0]) for rec in reader])


def fixture_files(name: str):
    d = FIXTURES / name
    model = next(p for p in d.iterdir() if p.name.startswith("model."))
    return model, read_inputs(d / "inputs.csv"), \
        read_predictions(d / "predictions.csv")
