"""Parsers turning external GBRT dumps into an Ensemble.

Supported formats:

* ``lightgbm-text`` -- the text file written by LightGBM's
  ``save_model`` (``Tree=`` stanzas with split_feature, threshold,
  decision_type, left_child, right_child, leaf_value). Leaf values in
  the dump are already shrunken, so parsed models use learning rate 1
  and base score 0.
* ``xgboost-json`` -- the JSON document written by XGBoost's
  ``save_model`` (trees with split_indices, split_conditions,
  default_left, left_children/right_children; leaf values live in
  split_conditions). XGBoost routes value < threshold to the left;
  that is converted exactly to our value <= threshold rule by taking
  the predecessor float of each threshold.
* ``native-json`` -- this package's own format (gbrt.to_json).

External leaf numbering is remapped to dense 0-based per-tree ids; the
original ids are kept on each tree (source_leaf_ids) for diagnostics.
Classification, multi-output, and categorical-split dumps raise
UnsupportedModelError.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import InvalidInputError, ParseError, UnsupportedModelError
from .gbrt import Ensemble, Tree, from_json

FORMATS = ("lightgbm-text", "xgboost-json", "native-json")


def parse_model(raw: bytes | str, format: str) -> Ensemble:
    """Parse a complete model dump of the given format."""
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    if format == "native-json":
        return from_json(raw)
    if format == "lightgbm-text":
        return _parse_lightgbm_text(raw)
    if format == "xgboost-json":
        return _parse_xgboost_json(raw)
    raise InvalidInputError(
        f"unknown model format {format!r}; expected one of {FORMATS}")


def load_model(path, format: str) -> Ensemble:
    with open(path, "rb") as fh:
        return parse_model(fh.read(), format)


def sniff_format(path) -> str:
    """Guess the dump format from the file name and first bytes."""
    with open(path, "rb") as fh:
        head = fh.read(64).lstrip()
    if head.startswith(b"{"):
        body = open(path, "rb").read()
        return "native-json" if b'"trees"' in body and b'"learner"' not in body \
            else "xgboost-json"
    return "lightgbm-text"


# ---------------------------------------------------------------------------
# LightGBM text format

def _lgb_stanzas(text: str):
    """Split the dump into (header dict, list of (lineno, tree dict))."""
    header: dict[str, str] = {}
    trees: list[tuple[int, dict[str, str]]] = []
    current: dict[str, str] | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line == "tree":
            continue
        if line.startswith("end of trees"):
            break
        if "=" not in line:
            continue
        key, _, val = line.partition("=")
        if key == "Tree":
            current = {}
            trees.append((lineno, current))
            continue
        (header if current is None else current)[key] = val
    return header, trees


def _lgb_floats(stanza, key, lineno):
    if key not in stanza:
        raise ParseError(f"tree stanza missing {key!r}", line=lineno)
    return np.array([float(v) for v in stanza[key].split()], dtype=np.float64)


def _lgb_ints(stanza, key, lineno):
    if key not in stanza:
        raise ParseError(f"tree stanza missing {key!r}", line=lineno)
    return np.array([int(v) for v in stanza[key].split()], dtype=np.int64)


def _missing_left_from_decision_type(dt: int, threshold: float, lineno: int) -> bool:
    if dt & 1:
        raise UnsupportedModelError(
            f"categorical split (decision_type={dt}) is not supported (line {lineno})")
    default_left = bool(dt & 2)
    missing_type = (dt >> 2) & 3  # 0 none, 1 zero, 2 nan
    if missing_type == 0:
        # LightGBM replaces NaN with 0.0 in this mode; bake that in.
        return 0.0 <= threshold
    return default_left


def _parse_lightgbm_text(text: str) -> Ensemble:
    header, stanzas = _lgb_stanzas(text)
    if not stanzas and "max_feature_idx" not in header:
        raise ParseError("not a LightGBM model file (no header, no Tree stanzas)",
                         line=1)
    objective = header.get("objective", "")
    if objective and not objective.startswith(("regression", "l2", "mse")):
        raise UnsupportedModelError(
            f"objective {objective!r} is not a squared-error regression")
    if int(header.get("num_class", "1")) != 1 \
            or int(header.get("num_tree_per_iteration", "1")) != 1:
        raise UnsupportedModelError("multi-class/multi-output dumps are not supported")
    try:
        n_features = int(header["max_feature_idx"]) + 1
    except KeyError:
        raise ParseError("header missing max_feature_idx", line=1) from None

    trees = []
    for lineno, st in stanzas:
        n_leaves = int(st.get("num_leaves", "0"))
        if n_leaves < 1:
            raise ParseError("num_leaves < 1 in tree stanza", line=lineno)
        leaf_value = _lgb_floats(st, "leaf_value", lineno)
        if len(leaf_value) != n_leaves:
            raise ParseError("leaf_value length != num_leaves", line=lineno)
        if n_leaves == 1:
            trees.append(_flatten_children(
                split_feature=np.empty(0, np.int64),
                threshold=np.empty(0, np.float64),
                missing_left=np.empty(0, bool),
                left=np.empty(0, np.int64), right=np.empty(0, np.int64),
                leaf_value=leaf_value,
                leaf_is_negative_index=True, lineno=lineno))
            continue
        split_feature = _lgb_ints(st, "split_feature", lineno)
        threshold = _lgb_floats(st, "threshold", lineno)
        decision_type = _lgb_ints(st, "decision_type", lineno)
        left = _lgb_ints(st, "left_child", lineno)
        right = _lgb_ints(st, "right_child", lineno)
        n_internal = n_leaves - 1
        for name, arr in (("split_feature", split_feature), ("threshold", threshold),
                          ("decision_type", decision_type), ("left_child", left),
                          ("right_child", right)):
            if len(arr) != n_internal:
                raise ParseError(f"{name} length != num_leaves - 1", line=lineno)
        missing_left = np.array(
            [_missing_left_from_decision_type(int(dt), float(t), lineno)
             for dt, t in zip(decision_type, threshold)], dtype=bool)
        trees.append(_flatten_children(
            split_feature, threshold, missing_left, left, right, leaf_value,
            leaf_is_negative_index=True, lineno=lineno))
    return Ensemble(base_score=0.0, learning_rate=1.0, trees=tuple(trees),
                    lam=0.0, n_features=n_features)


def _flatten_children(split_feature, threshold, missing_left, left, right,
                      leaf_value, leaf_is_negative_index: bool, lineno: int) -> Tree:
    """Rebuild a Tree in pre-order from internal/leaf child index arrays.

    LightGBM encodes a child as an internal-node index when >= 0 and as
    leaf ~index when negative. Original leaf ids are recorded so
    diagnostics can reference the source numbering.
    """
    feature, thr, mleft, lchild, rchild, value = [], [], [], [], [], []
    source_ids = []

    def alloc():
        feature.append(-1)
        thr.append(0.0)
        mleft.append(True)
        lchild.append(-1)
        rchild.append(-1)
        value.append(0.0)
        return len(feature) - 1

    if len(split_feature) == 0:
        alloc()
        value[0] = float(leaf_value[0])
        source_ids.append(0)
    else:
        # work items: (is_leaf, original index, parent slot, is_left)
        stack = [(False, 0, -1, False)]
        seen_internal = set()
        while stack:
            is_leaf, orig, parent, is_left = stack.pop()
            slot = alloc()
            if parent >= 0:
                (lchild if is_left else rchild)[parent] = slot
            if is_leaf:
                if not 0 <= orig < len(leaf_value):
                    raise ParseError(f"leaf index {orig} out of range", line=lineno)
                value[slot] = float(leaf_value[orig])
                source_ids.append(orig)
                continue
            if orig in seen_internal or not 0 <= orig < len(split_feature):
                raise ParseError(f"bad internal node reference {orig}", line=lineno)
            seen_internal.add(orig)
            feature[slot] = int(split_feature[orig])
            thr[slot] = float(threshold[orig])
            mleft[slot] = bool(missing_left[orig])

            def decode(child):
                if leaf_is_negative_index and child < 0:
                    return True, ~int(child)
                return False, int(child)

            # push right first so pre-order materializes left first
            stack.append(decode(right[orig]) + (slot, False))
            stack.append(decode(left[orig]) + (slot, True))

    gain = [0.0] * len(feature)
    return Tree(feature, thr, mleft, lchild, rchild, value, gain,
                source_leaf_ids=np.array(source_ids, dtype=np.int64))


# ---------------------------------------------------------------------------
# XGBoost JSON format (save_model schema)

def _parse_xgboost_json(text: str) -> Ensemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno,
                         offset=e.pos) from None
    try:
        learner = doc["learner"]
        lmp = learner["learner_model_param"]
        model = learner["gradient_booster"]["model"]
        tree_docs = model["trees"]
    except (KeyError, TypeError):
        raise ParseError("not an XGBoost save_model document "
                         "(missing learner/gradient_booster/model/trees)") from None
    objective = learner.get("objective", {}).get("name", "")
    if objective not in ("reg:squarederror", "reg:linear", ""):
        raise UnsupportedModelError(
            f"objective {objective!r} is not squared-error regression")
    if int(lmp.get("num_class", "0")) > 1 or int(lmp.get("num_target", "1")) > 1:
        raise UnsupportedModelError("multi-class/multi-target dumps are not supported")
    base_score = float(lmp.get("base_score", "0.5"))
    n_features = int(lmp.get("num_feature", "0"))

    trees = []
    for i, td in enumerate(tree_docs):
        try:
            left = np.asarray(td["left_children"], dtype=np.int64)
            right = np.asarray(td["right_children"], dtype=np.int64)
            split_idx = np.asarray(td["split_indices"], dtype=np.int64)
            cond = np.asarray(td["split_conditions"], dtype=np.float64)
            default_left = np.asarray(td["default_left"], dtype=np.int64)
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"malformed tree record {i}") from None
        if any(int(s) != 0 for s in td.get("split_type", [])):
            raise UnsupportedModelError(
                f"tree {i} contains categorical splits, which are not supported")
        trees.append(_xgb_tree(left, right, split_idx, cond, default_left, i))
    return Ensemble(base_score=base_score, learning_rate=1.0, trees=tuple(trees),
                    lam=0.0, n_features=n_features)


def _xgb_tree(left, right, split_idx, cond, default_left, tree_no: int) -> Tree:
    n = len(left)
    if not (len(right) == len(split_idx) == len(cond) == len(default_left) == n) or n == 0:
        raise ParseError(f"inconsistent node arrays in tree {tree_no}")
    feature, thr, mleft, lchild, rchild, value = [], [], [], [], [], []
    source_ids = []

    stack = [(0, -1, False)]  # (original node id, parent slot, is_left)
    seen = set()
    while stack:
        orig, parent, is_left = stack.pop()
        if orig in seen or not 0 <= orig < n:
            raise ParseError(f"bad node reference {orig} in tree {tree_no}")
        seen.add(orig)
        slot = len(feature)
        feature.append(-1)
        thr.append(0.0)
        mleft.append(True)
        lchild.append(-1)
        rchild.append(-1)
        value.append(0.0)
        if parent >= 0:
            (lchild if is_left else rchild)[parent] = slot
        if left[orig] == -1:  # leaf: value lives in split_conditions
            value[slot] = float(cond[orig])
            source_ids.append(orig)
            continue
        feature[slot] = int(split_idx[orig])
        # xgboost: value < cond goes left; ours: value <= thr goes left
        thr[slot] = float(np.nextafter(cond[orig], -np.inf))
        mleft[slot] = bool(default_left[orig])
        stack.append((int(right[orig]), slot, False))
        stack.append((int(left[orig]), slot, True))

    gain = [0.0] * len(feature)
    return Tree(feature, thr, mleft, lchild, rchild, value, gain,
                source_leaf_ids=np.array(source_ids, dtype=np.int64))
