"""Dump emitters: write a native-format tree ensemble out in the
LightGBM text and XGBoost JSON schemas.

Leaf numbering is shuffled (LightGBM) or breadth-first (XGBoost) so
the emitted files do not share the native pre-order numbering; any
consumer has to do its own remapping. Shrinkage and the native base
score are folded into leaf values the way each framework stores them:
LightGBM dumps carry fully shrunken leaf values and no explicit base
(the first tree absorbs it); XGBoost keeps an explicit base_score.
"""
from __future__ import annotations

import json

import numpy as np


def _collect(tree):
    """Pre-order lists of internal nodes and leaves from a nested tree."""
    internals, leaves = [], []

    def walk(node):
        if node[0] == "leaf":
            leaves.append(node)
            return ("leaf", len(leaves) - 1)
        internals.append(node)
        my = len(internals) - 1
        left = walk(node[4])
        right = walk(node[5])
        return ("internal", my, left, right)

    shape = walk(tree)
    return internals, leaves, shape


def emit_lightgbm_text(model: dict, rng: np.random.Generator) -> str:
    """LightGBM text dump of a native model (regression, NaN-missing)."""
    p = model["n_features"]
    eta = model["learning_rate"]
    lines = [
        "tree",
        "version=v3",
        "num_class=1",
        "num_tree_per_iteration=1",
        "label_index=0",
        f"max_feature_idx={p - 1}",
        "objective=regression",
        "feature_names=" + " ".join(f"f{i}" for i in range(p)),
        "feature_infos=" + " ".join(["none"] * p),
        "",
    ]
    for t, tree in enumerate(model["trees"]):
        internals, leaves, shape = _collect(tree)
        n_leaves = len(leaves)
        leaf_number = rng.permutation(n_leaves)  # scramble external ids
        leaf_value = np.zeros(n_leaves)
        for pre_idx, leaf in enumerate(leaves):
            v = eta * leaf[1] + (model["base_score"] if t == 0 else 0.0)
            leaf_value[leaf_number[pre_idx]] = v

        split_feature = [str(n[1]) for n in internals]
        threshold = [repr(n[2]) for n in internals]
        decision_type = [str(8 | (2 if n[3] else 0)) for n in internals]
        left_child, right_child = [""] * len(internals), [""] * len(internals)

        def child_ref(sub):
            if sub[0] == "leaf":
                return str(-int(leaf_number[sub[1]]) - 1)
            return str(sub[1])

        def fill(sub):
            if sub[0] == "leaf":
                return
            _, my, left, right = sub
            left_child[my] = child_ref(left)
            right_child[my] = child_ref(right)
            fill(left)
            fill(right)

        if shape[0] == "internal":
            fill(shape)
        lines += [f"Tree={t}", f"num_leaves={n_leaves}", "num_cat=0"]
        if internals:
            lines += [
                "split_feature=" + " ".join(split_feature),
                "split_gain=" + " ".join(["0"] * len(internals)),
                "threshold=" + " ".join(threshold),
                "decision_type=" + " ".join(decision_type),
                "left_child=" + " ".join(left_child),
                "right_child=" + " ".join(right_child),
            ]
        lines += [
            "leaf_value=" + " ".join(repr(float(v)) for v in leaf_value),
            "leaf_weight=" + " ".join(["0"] * n_leaves),
            "leaf_count=" + " ".join(["0"] * n_leaves),
            "shrinkage=1",
            "",
        ]
    lines += ["end of trees", ""]
    return "\n".join(lines)


def emit_xgboost_json(model: dict, base_score: float) -> str:
    """XGBoost save_model JSON of a native model.

    Nodes are numbered breadth-first. The native rule (value <=
    threshold goes left) becomes XGBoost's strict (value < condition)
    by storing the successor float as the condition.
    """
    p = model["n_features"]
    eta = model["learning_rate"]
    tree_docs = []
    for t, tree in enumerate(model["trees"]):
        fold = eta, (model["base_score"] - base_score if t == 0 else 0.0)
        nodes = _bfs_nodes(tree)
        n = len(nodes)
        left = [-1] * n
        right = [-1] * n
        parents = [2147483647] * n
        split_idx = [0] * n
        cond = [0.0] * n
        dleft = [0] * n
        weights = [0.0] * n
        for i, (node, parent, left_i, right_i) in enumerate(nodes):
            if parent >= 0:
                parents[i] = parent
            if node[0] == "leaf":
                v = fold[0] * node[1] + fold[1]
                cond[i] = v
                weights[i] = v
                continue
            left[i], right[i] = left_i, right_i
            split_idx[i] = node[1]
            cond[i] = float(np.nextafter(node[2], np.inf))
            dleft[i] = 1 if node[3] else 0
        tree_docs.append({
            "base_weights": weights,
            "categories": [], "categories_nodes": [],
            "categories_segments": [], "categories_sizes": [],
            "default_left": dleft,
            "id": t,
            "left_children": left,
            "loss_changes": [0.0] * n,
            "parents": parents,
            "right_children": right,
            "split_conditions": cond,
            "split_indices": split_idx,
            "split_type": [0] * n,
            "sum_hessian": [1.0] * n,
            "tree_param": {"num_deleted": "0", "num_feature": str(p),
                           "num_nodes": str(n), "size_leaf_vector": "1"},
        })
    doc = {
        "learner": {
            "attributes": {},
            "feature_names": [],
            "feature_types": [],
            "gradient_booster": {
                "model": {
                    "gbtree_model_param": {
                        "num_parallel_tree": "1",
                        "num_trees": str(len(tree_docs)),
                    },
                    "trees": tree_docs,
                    "tree_info": [0] * len(tree_docs),
                },
                "name": "gbtree",
            },
            "learner_model_param": {
                "base_score": repr(base_score),
                "boost_from_average": "1",
                "num_class": "0",
                "num_feature": str(p),
                "num_target": "1",
            },
            "objective": {
                "name": "reg:squarederror",
                "reg_loss_param": {"scale_pos_weight": "1"},
            },
        },
        "version": [1, 7, 6],
    }
    return json.dumps(doc)


def _bfs_nodes(tree):
    """Breadth-first (node, parent index, left index, right index) list."""
    out = []
    queue = [(tree, -1, None)]  # (node, parent out-index, is_left)
    while queue:
        node, parent, is_left = queue.pop(0)
        out.append([node, parent, -1, -1])
        my = len(out) - 1
        if parent >= 0:
            out[parent][2 if is_left else 3] = my
        if node[0] == "split":
            queue.append((node[4], my, True))
            queue.append((node[5], my, False))
    return [tuple(rec) for rec in out]
