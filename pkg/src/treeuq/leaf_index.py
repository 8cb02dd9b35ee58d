"""Inverted index from (tree, leaf) to training-instance ids.

For each tree the leaf lists partition {0..n_train-1}; ids within a
list are strictly increasing. Training targets are co-located so the
posterior stage never needs the raw feature matrix. Built once, then
immutable; concurrent readers are safe.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .data import Dataset
from .errors import InvalidInputError
from .gbrt import Ensemble, to_json

CACHE_VERSION = 1


class LeafIndex:
    __slots__ = ("lists", "n_train", "targets")

    def __init__(self, lists, n_train: int, targets: np.ndarray):
        self.lists = lists  # lists[t][leaf_id] -> sorted int64 array
        self.n_train = n_train
        self.targets = np.asarray(targets, dtype=np.float64)

    @property
    def n_trees(self) -> int:
        return len(self.lists)

    def lookup(self, tree: int, leaf_id: int) -> np.ndarray:
        """Instance ids routed to the given leaf (sorted, ascending)."""
        return self.lists[tree][leaf_id]


def build_index(model: Ensemble, data: Dataset) -> LeafIndex:
    """Route every training instance through every tree.

    `data` must be the model's training set; that is the caller's
    responsibility and is not checkable here.
    """
    if data.p != model.n_features:
        raise InvalidInputError(
            f"dataset has {data.p} features, model expects {model.n_features}")
    lists = []
    for tree in model.trees:
        leaves = tree.leaves_of_matrix(data.features)
        order = np.argsort(leaves, kind="stable")  # ids stay ascending per leaf
        sorted_leaves = leaves[order]
        bounds = np.searchsorted(sorted_leaves, np.arange(tree.n_leaves + 1))
        lists.append([order[bounds[j]:bounds[j + 1]].astype(np.int64)
                      for j in range(tree.n_leaves)])
    return LeafIndex(lists, data.n, data.targets)


def leaf_density(index: LeafIndex, model: Ensemble, probes: Dataset) -> np.ndarray:
    """Per-tree mean fraction of training instances sharing the probe's leaf."""
    if probes.n < 1:
        raise InvalidInputError("probes must be non-empty")
    out = np.empty(index.n_trees)
    for t, tree in enumerate(model.trees):
        sizes = np.array([len(lst) for lst in index.lists[t]], dtype=np.float64)
        leaves = tree.leaves_of_matrix(probes.features)
        out[t] = sizes[leaves].mean() / index.n_train
    return out


# ---------------------------------------------------------------------------
# Binary cache keyed by a content hash of (model JSON, dataset bytes).

def content_key(model: Ensemble, data: Dataset) -> str:
    h = hashlib.sha256()
    h.update(to_json(model).encode())
    h.update(np.ascontiguousarray(data.features).tobytes())
    h.update(np.ascontiguousarray(data.targets).tobytes())
    return h.hexdigest()


def save_cache(path, index: LeafIndex, key: str) -> None:
    flat, offsets, tree_starts = [], [0], [0]
    for t in range(index.n_trees):
        for lst in index.lists[t]:
            flat.append(lst)
            offsets.append(offsets[-1] + len(lst))
        tree_starts.append(tree_starts[-1] + len(index.lists[t]))
    ids = np.concatenate(flat) if flat else np.empty(0, dtype=np.int64)
    np.savez(path, version=np.int64(CACHE_VERSION),
             key=np.frombuffer(key.encode(), dtype=np.uint8),
             ids=ids, offsets=np.asarray(offsets, dtype=np.int64),
             tree_starts=np.asarray(tree_starts, dtype=np.int64),
             n_train=np.int64(index.n_train), targets=index.targets)


def load_cache(path, key: str) -> LeafIndex | None:
    """Load a cached index; None on version or key mismatch."""
    try:
        with np.load(path) as z:
            if int(z["version"]) != CACHE_VERSION:
                return None
            if bytes(z["key"].tobytes()).decode() != key:
                return None
            ids, offsets, tree_starts = z["ids"], z["offsets"], z["tree_starts"]
            lists = []
            for t in range(len(tree_starts) - 1):
                lists.append([ids[offsets[j]:offsets[j + 1]]
                              for j in range(tree_starts[t], tree_starts[t + 1])])
            return LeafIndex(lists, int(z["n_train"]), z["targets"])
    except (OSError, KeyError, ValueError):
        return None
