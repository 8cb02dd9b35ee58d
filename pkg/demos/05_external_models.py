"""Wrap a third-party GBRT: parse a LightGBM text dump and an XGBoost
JSON dump, then check prediction parity against recorded outputs."""
import csv
from pathlib import Path

import numpy as np

from treeuq import load_model, predict_many

FIXTURES = Path(__file__).parent.parent / "fixtures"


def read_fixture(name):
    d = FIXTURES / name
    model_file = next(p for p in d.iterdir() if p.name.startswith("model."))
    with open(d / "inputs.csv") as fh:
        rows = [[np.nan if c == "" else float(c) for c in rec]
                for rec in list(csv.reader(fh))[1:]]
    with open(d / "predictions.csv") as fh:
        recorded = [float(rec[0]) for rec in list(csv.reader(fh))[1:]]
    return model_file, np.array(rows), np.array(recorded)


for name, fmt in [("lgbm_small", "lightgbm-text"),
                  ("xgb_small", "xgboost-json")]:
    model_file, inputs, recorded = read_fixture(name)
    model = load_model(model_file, fmt)
    ours = predict_many(model, inputs)
    print(f"{name}: {model.n_trees} trees, {model.n_features} features, "
          f"base_score={model.base_score}")
    print(f"  max |ours - recorded| over {len(inputs)} rows "
          f"(incl. an all-missing row): {np.max(np.abs(ours - recorded)):.2e}")
