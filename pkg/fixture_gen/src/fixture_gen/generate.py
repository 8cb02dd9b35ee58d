"""The fixture generation driver.

Layout written per fixture (the layout the parser tests consume):

    <out_root>/<name>/model.txt | model.json   the dump
    <out_root>/<name>/inputs.csv               50 feature rows
    <out_root>/<name>/predictions.csv          recorded raw scores
    <out_root>/<name>/spec.json                self-description

Inputs always include edge values, scattered missing cells, and one
all-missing row. Everything is deterministic given the spec's seed.
"""
from __future__ import annotations

import csv
import subprocess
import sys
from pathlib import Path

import numpy as np

from .emitters import emit_lightgbm_text, emit_xgboost_json
from .evaluate import eval_lightgbm_text, eval_xgboost_json
from .native_model import read_native_model
from .spec import FixtureSpec, save_spec

N_INPUT_ROWS = 50


class FrameworkUnavailableError(RuntimeError):
    """The reference framework is not importable in this environment."""


def _train_data(spec: FixtureSpec, rng: np.random.Generator):
    """Synthetic training table: continuous plus coarse integer-coded
    columns, with a sprinkle of missing cells."""
    X = rng.normal(size=(spec.n, spec.p))
    for j in range(0, spec.p, 3):
        X[:, j] = np.round(X[:, j] * 2.0) / 2.0  # repeated values
    y = (X[:, 0] - 0.5 * X[:, 1 % spec.p] ** 2
         + 0.3 * rng.normal(size=spec.n))
    X[rng.random(size=X.shape) < 0.05] = np.nan
    return X, y


def _input_rows(spec: FixtureSpec, rng: np.random.Generator,
                X_train: np.ndarray, thresholds: list[float]) -> np.ndarray:
    rows = rng.normal(size=(N_INPUT_ROWS, spec.p))
    rows[rng.random(size=rows.shape) < 0.1] = np.nan
    # a few exact training rows
    for i, r in enumerate(rng.integers(0, X_train.shape[0], size=5)):
        rows[i] = X_train[r]
    # values exactly on split thresholds exercise boundary routing
    for i, thr in enumerate(thresholds[:5]):
        rows[5 + i, i % spec.p] = thr
    rows[-1, :] = np.nan  # the all-missing row
    return rows


def _write_inputs_csv(path: Path, rows: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(rows.shape[1])])
        for row in rows:
            w.writerow(["" if np.isnan(v) else format(v, ".17g") for v in row])


def _write_predictions_csv(path: Path, preds: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["prediction"])
        for v in preds:
            w.writerow([format(v, ".17g")])


def _write_train_csv(path: Path, X: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(X.shape[1])] + ["y"])
        for row, t in zip(X, y):
            w.writerow(["" if np.isnan(v) else format(v, ".17g")
                        for v in row] + [format(t, ".17g")])


def _framework_available(name: str) -> bool:
    try:
        __import__(name)
        return True
    except ImportError:
        return False


def generate_fixture(spec: FixtureSpec, out_root,
                     force_builtin: bool = False) -> dict:
    """Write one fixture directory; returns the file paths."""
    out_dir = Path(out_root) / spec.name
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    X, y = _train_data(spec, rng)

    use_reference = not force_builtin and _framework_available(spec.framework)
    if use_reference:
        model_path, thresholds, predict = _reference_model(spec, out_dir, X, y)
        generator = "reference-library"
    else:
        model_path, thresholds, predict = _builtin_model(spec, out_dir, X, y)
        generator = "builtin-emitter"

    inputs = _input_rows(spec, rng, X, thresholds)
    preds = predict(inputs)
    _write_inputs_csv(out_dir / "inputs.csv", inputs)
    _write_predictions_csv(out_dir / "predictions.csv", preds)
    save_spec(spec, generator, out_dir)
    return {"model": model_path, "inputs": out_dir / "inputs.csv",
            "predictions": out_dir / "predictions.csv",
            "spec": out_dir / "spec.json", "generator": generator}


# ---------------------------------------------------------------------------
# builtin route: train via the main package's CLI, emit + interpret here

def _builtin_model(spec: FixtureSpec, out_dir: Path, X, y):
    train_csv = out_dir / "_train.csv"
    native_json = out_dir / "_native.json"
    _write_train_csv(train_csv, X, y)
    cmd = [sys.executable, "-m", "treeuq.cli", "train",
           "--data", str(train_csv), "--target", "y",
           "--out", str(native_json),
           "--n-trees", str(spec.n_trees), "--max-depth", str(spec.depth),
           "--learning-rate", repr(spec.learning_rate),
           "--seed", str(spec.seed)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"trainer CLI failed: {proc.stderr}")
    model = read_native_model(native_json)
    train_csv.unlink()
    native_json.unlink()

    thresholds = _first_thresholds(model)
    if spec.framework == "lightgbm":
        text = emit_lightgbm_text(model, np.random.default_rng(spec.seed + 1))
        model_path = out_dir / "model.txt"
        model_path.write_text(text)
        return model_path, thresholds, lambda rows: eval_lightgbm_text(text, rows)
    base = 0.5 if spec.base_score is None else spec.base_score
    text = emit_xgboost_json(model, base_score=base)
    model_path = out_dir / "model.json"
    model_path.write_text(text)
    return model_path, thresholds, lambda rows: eval_xgboost_json(text, rows)


def _first_thresholds(model: dict, limit: int = 8) -> list[float]:
    out = []

    def walk(node):
        if len(out) >= limit or node[0] == "leaf":
            return
        out.append(node[2])
        walk(node[4])
        walk(node[5])

    for tree in model["trees"]:
        walk(tree)
        if len(out) >= limit:
            break
    return out


# ---------------------------------------------------------------------------
# reference route: the real frameworks produce dump and predictions

def _reference_model(spec: FixtureSpec, out_dir: Path, X, y):
    if spec.framework == "lightgbm":
        import lightgbm as lgb
        params = {"objective": "regression", "max_depth": spec.depth,
                  "num_leaves": 2 ** spec.depth,
                  "learning_rate": spec.learning_rate,
                  "min_data_in_leaf": 1, "verbose": -1,
                  "seed": spec.seed, "deterministic": True}
        booster = lgb.train(params, lgb.Dataset(X, label=y),
                            num_boost_round=spec.n_trees)
        model_path = out_dir / "model.txt"
        booster.save_model(str(model_path))
        thresholds = [float(t) for t in
                      booster.dump_model()["tree_info"][0]["tree_structure"]
                      .get("threshold", [])] or [0.0]
        return model_path, thresholds, \
            lambda rows: np.asarray(booster.predict(rows))
    import xgboost as xgb
    base = 0.5 if spec.base_score is None else spec.base_score
    params = {"objective": "reg:squarederror", "max_depth": spec.depth,
              "eta": spec.learning_rate, "base_score": base,
              "seed": spec.seed}
    booster = xgb.train(params, xgb.DMatrix(X, label=y),
                        num_boost_round=spec.n_trees)
    model_path = out_dir / "model.json"
    booster.save_model(str(model_path))
    return model_path, [0.0], \
        lambda rows: np.asarray(
            booster.predict(xgb.DMatrix(rows), output_margin=True))
