"""Minimal squared-error GBRT: training, prediction, leaf routing.

Trees are stored as flat parallel arrays in pre-order; leaves carry
dense per-tree leaf ids (0..M_t-1, assigned in pre-order). Routing is
total: value <= threshold goes left, NaN goes to the side given by the
node's missing_goes_left flag.

Training uses squared-error boosting: with gradient g_i = yhat_i - y_i
and unit hessians, each leaf value is sum(y_i - yhat_i) / (|I| + lambda)
over its instance set. Splits are exact greedy over sorted unique
feature values (midpoint thresholds), scored by the regularized
variance-reduction gain GL^2/(nL+lam) + GR^2/(nR+lam) - G^2/(n+lam) on
the residuals. Ties in gain break to the lowest feature index, then the
lowest threshold; missing-direction ties prefer left. Deterministic
given the seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InvalidInputError, ParseError

NATIVE_FORMAT_VERSION = 1


class Tree:
    """A single regression tree over flat pre-order node arrays.

    feature[i] == -1 marks a leaf; left/right are node indices (-1 at
    leaves); value holds leaf values; leaf_id holds dense leaf ids
    (-1 at internal nodes); gain holds the split gain (0 at leaves).
    """

    __slots__ = ("feature", "threshold", "missing_left", "left", "right",
                 "value", "leaf_id", "gain", "n_leaves", "leaf_values",
                 "source_leaf_ids")

    def __init__(self, feature, threshold, missing_left, left, right,
                 value, gain, source_leaf_ids=None):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.missing_left = np.asarray(missing_left, dtype=bool)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)
        self.gain = np.asarray(gain, dtype=np.float64)
        leaf_mask = self.feature < 0
        self.n_leaves = int(leaf_mask.sum())
        # dense leaf ids in pre-order encounter order
        self.leaf_id = np.full(len(self.feature), -1, dtype=np.int32)
        self.leaf_id[leaf_mask] = np.arange(self.n_leaves, dtype=np.int32)
        self.leaf_values = self.value[leaf_mask].copy()
        # optional map dense id -> original id from an external dump
        self.source_leaf_ids = source_leaf_ids

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_of_row(self, x: np.ndarray) -> int:
        """Route one row to its dense leaf id."""
        nd = 0
        while self.feature[nd] >= 0:
            v = x[self.feature[nd]]
            if np.isnan(v):
                go_left = self.missing_left[nd]
            else:
                go_left = v <= self.threshold[nd]
            nd = self.left[nd] if go_left else self.right[nd]
        return int(self.leaf_id[nd])

    def leaves_of_matrix(self, X: np.ndarray) -> np.ndarray:
        """Dense leaf id of every row of X (vectorized routing)."""
        n = X.shape[0]
        out = np.empty(n, dtype=np.int32)
        stack = [(0, np.arange(n))]
        while stack:
            nd, rows = stack.pop()
            if rows.size == 0:
                continue
            if self.feature[nd] < 0:
                out[rows] = self.leaf_id[nd]
                continue
            v = X[rows, self.feature[nd]]
            miss = np.isnan(v)
            go_left = np.where(miss, self.missing_left[nd], v <= self.threshold[nd])
            stack.append((int(self.left[nd]), rows[go_left]))
            stack.append((int(self.right[nd]), rows[~go_left]))
        return out


@dataclass(frozen=True)
class Ensemble:
    """A trained GBRT: base score plus shrunken additive trees.

    prediction(x) = base_score + learning_rate * sum_t leaf_value_t(x).
    Immutable once built; concurrent read-only prediction is safe.
    """

    base_score: float
    learning_rate: float
    trees: tuple
    lam: float
    n_features: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int
    learning_rate: float = 0.1
    max_depth: int | None = None  # None = unlimited
    min_leaf_size: int = 1
    lam: float = 0.0
    subsample_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise InvalidInputError("n_trees must be >= 0")
        if self.learning_rate <= 0:
            raise InvalidInputError("learning_rate must be > 0")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidInputError("max_depth must be positive or None")
        if self.min_leaf_size < 1:
            raise InvalidInputError("min_leaf_size must be >= 1")
        if self.lam < 0:
            raise InvalidInputError("lambda must be >= 0")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise InvalidInputError("subsample_fraction must be in (0, 1]")


def _best_split(X, g, idx, lam, min_leaf):
    """Best (gain, feature, threshold, missing_left) over all features
    at one node, or None. Ties: lowest feature, lowest threshold,
    missing-left preferred."""
    gn = g[idx]
    G = gn.sum()
    n_node = len(idx)
    parent = G * G / (n_node + lam)
    best = None
    for j in range(X.shape[1]):
        v = X[idx, j]
        miss = np.isnan(v)
        n_miss = int(miss.sum())
        if n_miss:
            G_miss = gn[miss].sum()
            pv, pg = v[~miss], gn[~miss]
        else:
            G_miss = 0.0
            pv, pg = v, gn
        if pv.size < 2:
            continue
        order = np.argsort(pv, kind="stable")
        sv = pv[order]
        boundary = np.nonzero(sv[1:] != sv[:-1])[0]
        if boundary.size == 0:
            continue
        cum = np.cumsum(pg[order])
        nL0 = boundary + 1
        GL0 = cum[boundary]
        nR0 = pv.size - nL0
        GR0 = cum[-1] - GL0
        # midpoints can round up onto the right value (adjacent-ulp data)
        # or overflow to inf; fall back to the left value, which always
        # realizes the same partition under the v <= thr rule
        with np.errstate(over="ignore"):
            thr = 0.5 * (sv[boundary] + sv[boundary + 1])
        bad = ~np.isfinite(thr) | (thr >= sv[boundary + 1])
        thr = np.where(bad, sv[boundary], thr)

        def side_gain(nL, GL, nR, GR):
            ok = (nL >= min_leaf) & (nR >= min_leaf)
            gain = GL * GL / (nL + lam) + GR * GR / (nR + lam) - parent
            return np.where(ok, gain, -np.inf)

        gain_l = side_gain(nL0 + n_miss, GL0 + G_miss, nR0, GR0)
        gain_r = side_gain(nL0, GL0, nR0 + n_miss, GR0 + G_miss)
        pos_gain = np.maximum(gain_l, gain_r)
        i = int(np.argmax(pos_gain))  # first max = lowest threshold
        if pos_gain[i] <= 0.0 or not np.isfinite(pos_gain[i]):
            continue
        if best is None or pos_gain[i] > best[0]:
            best = (float(pos_gain[i]), j, float(thr[i]),
                    bool(gain_l[i] >= gain_r[i]))
    return best


def _grow_tree(X, g, idx, cfg: TrainConfig) -> Tree:
    """Grow one regression tree on residuals g restricted to rows idx."""
    feature, threshold, missing_left = [], [], []
    left, right, value, gain = [], [], [], []

    def alloc():
        feature.append(-1)
        threshold.append(0.0)
        missing_left.append(True)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        gain.append(0.0)
        return len(feature) - 1

    # work items: (row indices, depth, parent slot, is_left_child)
    stack = [(idx, 0, -1, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        slot = alloc()
        if parent >= 0:
            (left if is_left else right)[parent] = slot
        split = None
        depth_ok = cfg.max_depth is None or depth < cfg.max_depth
        if depth_ok and len(rows) >= 2 * cfg.min_leaf_size:
            split = _best_split(X, g, rows, cfg.lam, cfg.min_leaf_size)
        if split is None:
            value[slot] = g[rows].sum() / (len(rows) + cfg.lam)
            continue
        sg, j, thr, mleft = split
        feature[slot] = j
        threshold[slot] = thr
        missing_left[slot] = mleft
        gain[slot] = sg
        v = X[rows, j]
        miss = np.isnan(v)
        go_left = np.where(miss, mleft, v <= thr)
        # push right first so the left child is materialized next (pre-order)
        stack.append((rows[~go_left], depth + 1, slot, False))
        stack.append((rows[go_left], depth + 1, slot, True))

    return Tree(feature, threshold, missing_left, left, right, value, gain)


def train(data: Dataset, config: TrainConfig) -> Ensemble:
    """Fit a squared-error GBRT; deterministic given config.seed."""
    if data.n < config.min_leaf_size:
        raise InvalidInputError("fewer instances than min_leaf_size")
    X, y = data.features, data.targets
    rng = np.random.default_rng(config.seed)
    base = float(y.mean())
    pred = np.full(data.n, base)
    trees = []
    n_sub = max(1, int(round(config.subsample_fraction * data.n)))
    for _ in range(config.n_trees):
        residual = y - pred
        if n_sub < data.n:
            rows = np.sort(rng.choice(data.n, size=n_sub, replace=False))
        else:
            rows = np.arange(data.n)
        tree = _grow_tree(X, residual, rows, config)
        trees.append(tree)
        pred += config.learning_rate * tree.leaf_values[tree.leaves_of_matrix(X)]
    return Ensemble(base, config.learning_rate, tuple(trees), config.lam,
                    data.p)


def _check_row(model: Ensemble, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise InvalidInputError(
            f"expected a length-{model.n_features} feature row, got shape {x.shape}")
    return x


def predict(model: Ensemble, x) -> float:
    """Point prediction for one feature row."""
    x = _check_row(model, x)
    total = 0.0
    for tree in model.trees:
        total += tree.leaf_values[tree.leaf_of_row(x)]
    return model.base_score + model.learning_rate * total


def predict_many(model: Ensemble, X) -> np.ndarray:
    """Point predictions for a feature matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise InvalidInputError(
            f"expected an (m, {model.n_features}) matrix, got shape {X.shape}")
    out = np.zeros(X.shape[0])
    for tree in model.trees:
        out += tree.leaf_values[tree.leaves_of_matrix(X)]
    return model.base_score + model.learning_rate * out


def leaf_path(model: Ensemble, x, tree_indices) -> np.ndarray:
    """Dense leaf id of x in each requested tree, in the given order."""
    x = _check_row(model, x)
    out = np.empty(len(tree_indices), dtype=np.int32)
    for i, t in enumerate(tree_indices):
        if not 0 <= t < model.n_trees:
            raise InvalidInputError(f"tree index {t} out of range [0, {model.n_trees})")
        out[i] = model.trees[t].leaf_of_row(x)
    return out


def leaf_paths_many(model: Ensemble, X, tree_indices) -> np.ndarray:
    """(m x len(tree_indices)) matrix of dense leaf ids."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty((X.shape[0], len(tree_indices)), dtype=np.int32)
    for i, t in enumerate(tree_indices):
        if not 0 <= t < model.n_trees:
            raise InvalidInputError(f"tree index {t} out of range [0, {model.n_trees})")
        out[:, i] = model.trees[t].leaves_of_matrix(X)
    return out


def feature_importance(model: Ensemble) -> np.ndarray:
    """Total split gain per feature; unused features get 0."""
    imp = np.zeros(model.n_features)
    for tree in model.trees:
        internal = tree.feature >= 0
        np.add.at(imp, tree.feature[internal], tree.gain[internal])
    return imp


# ---------------------------------------------------------------------------
# Native JSON serialization: versioned document, nodes in pre-order,
# round trip bit-exact on all numeric fields.

def to_json(model: Ensemble) -> str:
    doc = {
        "version": NATIVE_FORMAT_VERSION,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "lambda": model.lam,
        "n_features": model.n_features,
        "trees": [],
    }
    for tree in model.trees:
        nodes = []
        for i in range(tree.n_nodes):
            if tree.feature[i] < 0:
                nodes.append(["leaf", float(tree.value[i])])
            else:
                nodes.append(["split", int(tree.feature[i]),
                              float(tree.threshold[i]),
                              int(tree.missing_left[i])])
        doc["trees"].append({"nodes": nodes})
    return json.dumps(doc)


def save_json(model: Ensemble, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(model))


def _tree_from_preorder(nodes) -> Tree:
    feature, threshold, missing_left = [], [], []
    left, right, value = [], [], []
    cursor = 0

    def walk():
        nonlocal cursor
        if cursor >= len(nodes):
            raise ParseError("truncated pre-order node list", offset=cursor)
        rec = nodes[cursor]
        slot = cursor
        cursor += 1
        feature.append(-1)
        threshold.append(0.0)
        missing_left.append(True)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if rec[0] == "leaf":
            value[slot] = float(rec[1])
        elif rec[0] == "split":
            feature[slot] = int(rec[1])
            threshold[slot] = float(rec[2])
            missing_left[slot] = bool(rec[3])
            left[slot] = walk()
            right[slot] = walk()
        else:
            raise ParseError(f"unknown node kind {rec[0]!r}", offset=slot)
        return slot

    walk()
    if cursor != len(nodes):
        raise ParseError("trailing nodes after tree end", offset=cursor)
    gain = [0.0] * len(feature)
    return Tree(feature, threshold, missing_left, left, right, value, gain)


def from_json(text: str) -> Ensemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno,
                         offset=e.pos) from None
    if not isinstance(doc, dict) or doc.get("version") != NATIVE_FORMAT_VERSION:
        raise ParseError(f"unsupported native model version {doc.get('version')!r}"
                         if isinstance(doc, dict) else "not a model document")
    try:
        trees = tuple(_tree_from_preorder(t["nodes"]) for t in doc["trees"])
        return Ensemble(float(doc["base_score"]), float(doc["learning_rate"]),
                        trees, float(doc["lambda"]), int(doc["n_features"]))
    except (KeyError, TypeError, IndexError) as e:
        raise ParseError(f"malformed native model document: {e!r}") from None


def load_json(path) -> Ensemble:
    with open(path) as fh:
        return from_json(fh.read())
