"""Tree-kernel affinity: leaf co-occurrence counts and top-k neighbors.

The affinity of training instance i to a target x is the number of
trees (within a chosen subset) in which both land in the same leaf.
Counting walks the target's leaf instance set per tree, so the cost is
the number of training instances stored at the visited leaves, not
n_train. Neighbor extraction uses a deterministic total order:
affinity count descending, instance id ascending.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .gbrt import Ensemble, leaf_path
from .leaf_index import LeafIndex

STRATEGIES = ("all", "uniform-random", "first-to-last", "last-to-first")


@dataclass(frozen=True)
class AffinityVector:
    counts: np.ndarray  # length n_train, non-negative ints
    n_trees_used: int


@dataclass(frozen=True)
class TreeSubset:
    strategy: str = "all"
    tau: int | None = None  # defaults to all trees
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidInputError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")


@dataclass(frozen=True)
class NeighborSet:
    ids: np.ndarray      # k distinct instance ids
    targets: np.ndarray  # their target values
    k: int


def select_trees(n_trees: int, spec: TreeSubset) -> np.ndarray:
    """Ordered, distinct tree indices for the given subset spec."""
    tau = n_trees if spec.tau is None else spec.tau
    if not 1 <= tau <= n_trees:
        raise InvalidInputError(f"tau={tau} out of range [1, {n_trees}]")
    if spec.strategy == "all":
        return np.arange(n_trees)
    if spec.strategy == "first-to-last":
        return np.arange(tau)
    if spec.strategy == "last-to-first":
        return np.arange(n_trees - tau, n_trees)
    rng = np.random.default_rng(spec.seed)
    return np.sort(rng.choice(n_trees, size=tau, replace=False))


def compute_affinities(x, model: Ensemble, index: LeafIndex,
                       trees) -> AffinityVector:
    """Leaf co-occurrence counts of x against every training instance."""
    leaves = leaf_path(model, x, trees)
    counts = np.zeros(index.n_train, dtype=np.int64)
    for t, leaf in zip(trees, leaves):
        counts[index.lists[t][leaf]] += 1  # ids are unique within a leaf
    return AffinityVector(counts, len(trees))


def _order_key(counts: np.ndarray, n: int) -> np.ndarray:
    # total order: count descending, id ascending; encoded so that a
    # plain descending sort of the key realizes it exactly
    ids = np.arange(n, dtype=np.int64)
    return counts.astype(np.int64) * n + (n - 1 - ids)


def affinity_order(aff: AffinityVector) -> np.ndarray:
    """All instance ids sorted by (count desc, id asc); every prefix of
    length k equals top_k's ids."""
    key = _order_key(aff.counts, len(aff.counts))
    return np.argsort(-key, kind="stable")


def top_k(aff: AffinityVector, k: int, targets: np.ndarray) -> NeighborSet:
    """The k instances with the largest counts (ties to the lower id).

    Uses partial selection instead of a full sort.
    """
    n = len(aff.counts)
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} out of range [1, {n}]")
    key = _order_key(aff.counts, n)
    if k < n:
        top = np.argpartition(-key, k - 1)[:k]
    else:
        top = np.arange(n)
    ids = top[np.argsort(-key[top], kind="stable")]
    return NeighborSet(ids=ids, targets=np.asarray(targets)[ids], k=k)
