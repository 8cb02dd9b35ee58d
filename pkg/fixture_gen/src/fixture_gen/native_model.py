"""Reader for the main package's native JSON model format.

Parses the documented pre-order node list into nested tuples:
("leaf", value) or ("split", feature, threshold, missing_left, left,
right). Deliberately independent of the main package's code.
"""
from __future__ import annotations

import json


def read_native_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != 1:
        raise ValueError(f"unexpected native model version {doc.get('version')}")
    trees = [_nest(t["nodes"]) for t in doc["trees"]]
    return {
        "base_score": float(doc["base_score"]),
        "learning_rate": float(doc["learning_rate"]),
        "n_features": int(doc["n_features"]),
        "trees": trees,
    }


def _nest(nodes):
    pos = 0

    def walk():
        nonlocal pos
        rec = nodes[pos]
        pos += 1
        if rec[0] == "leaf":
            return ("leaf", float(rec[1]))
        _, feat, thr, mleft = rec
        left = walk()
        right = walk()
        return ("split", int(feat), float(thr), bool(mleft), left, right)

    tree = walk()
    assert pos == len(nodes), "trailing nodes in pre-order list"
    return tree


def count_leaves(tree) -> int:
    if tree[0] == "leaf":
        return 1
    return count_leaves(tree[4]) + count_leaves(tree[5])
