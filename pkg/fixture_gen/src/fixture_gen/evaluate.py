"""Standalone interpreters of the emitted dump formats.

These walk the dump files directly, implementing each framework's
documented routing semantics, and share no code with the main
package's parsers. Their outputs become the recorded predictions the
parity tests compare against.
"""
from __future__ import annotations

import json
import math

import numpy as np


def eval_lightgbm_text(text: str, X: np.ndarray) -> np.ndarray:
    trees = _lgb_trees(text)
    out = np.zeros(X.shape[0])
    for arrays in trees:
        for r in range(X.shape[0]):
            out[r] += _lgb_walk(arrays, X[r])
    return out


def _lgb_trees(text: str):
    trees, current = [], None
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("Tree="):
            current = {}
            trees.append(current)
            continue
        if line.startswith("end of trees"):
            break
        if current is None or "=" not in line:
            continue
        key, _, val = line.partition("=")
        current[key] = val
    out = []
    for st in trees:
        rec = {"leaf_value": [float(v) for v in st["leaf_value"].split()]}
        if "split_feature" in st:
            rec["split_feature"] = [int(v) for v in st["split_feature"].split()]
            rec["threshold"] = [float(v) for v in st["threshold"].split()]
            rec["decision_type"] = [int(v) for v in st["decision_type"].split()]
            rec["left_child"] = [int(v) for v in st["left_child"].split()]
            rec["right_child"] = [int(v) for v in st["right_child"].split()]
        out.append(rec)
    return out


def _lgb_walk(tree, row) -> float:
    if "split_feature" not in tree:  # constant tree
        return tree["leaf_value"][0]
    node = 0
    while True:
        v = row[tree["split_feature"][node]]
        dt = tree["decision_type"][node]
        thr = tree["threshold"][node]
        missing_type = (dt >> 2) & 3
        if math.isnan(v):
            if missing_type == 0:  # none: NaN is treated as 0.0
                go_left = 0.0 <= thr
            else:                  # zero or nan: default direction
                go_left = bool(dt & 2)
        else:
            go_left = v <= thr
        child = tree["left_child"][node] if go_left else tree["right_child"][node]
        if child < 0:
            return tree["leaf_value"][~child]
        node = child


def eval_xgboost_json(text: str, X: np.ndarray) -> np.ndarray:
    doc = json.loads(text)
    learner = doc["learner"]
    base = float(learner["learner_model_param"]["base_score"])
    trees = learner["gradient_booster"]["model"]["trees"]
    out = np.full(X.shape[0], base)
    for td in trees:
        left = td["left_children"]
        right = td["right_children"]
        split_idx = td["split_indices"]
        cond = td["split_conditions"]
        dleft = td["default_left"]
        for r in range(X.shape[0]):
            node = 0
            while left[node] != -1:
                v = X[r][split_idx[node]]
                if math.isnan(v):
                    go_left = bool(dleft[node])
                else:
                    go_left = v < cond[node]  # strict: xgboost routing
                node = left[node] if go_left else right[node]
            out[r] += cond[node]  # leaf value lives in split_conditions
    return out
