"""Property tests for the order-sensitive primitives."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from treeuq import TreeSubset, select_trees, top_k
from treeuq.affinity import AffinityVector, affinity_order


counts_arrays = st.lists(st.integers(min_value=0, max_value=12),
                         min_size=2, max_size=120)


@given(counts_arrays, st.integers(min_value=1, max_value=120))
@settings(max_examples=200, deadline=None)
def test_top_k_matches_sorted_prefix(counts, k):
    counts = np.asarray(counts, dtype=np.int64)
    k = min(k, len(counts))
    targets = np.arange(len(counts), dtype=np.float64)
    aff = AffinityVector(counts, int(counts.max()) if len(counts) else 0)
    want = sorted(range(len(counts)), key=lambda i: (-counts[i], i))[:k]
    assert top_k(aff, k, targets).ids.tolist() == want
    assert affinity_order(aff)[:k].tolist() == want


@given(counts_arrays)
@settings(max_examples=100, deadline=None)
def test_top_k_nested(counts):
    counts = np.asarray(counts, dtype=np.int64)
    targets = np.zeros(len(counts))
    aff = AffinityVector(counts, 12)
    prev: set = set()
    for k in range(1, len(counts) + 1):
        ids = set(top_k(aff, k, targets).ids.tolist())
        assert prev <= ids and len(ids) == k
        prev = ids


@given(st.integers(min_value=1, max_value=200),
       st.integers(min_value=1, max_value=200),
       st.sampled_from(["uniform-random", "first-to-last", "last-to-first"]),
       st.integers(min_value=0, max_value=2 ** 16))
@settings(max_examples=200, deadline=None)
def test_select_trees_always_valid(n_trees, tau, strategy, seed):
    tau = min(tau, n_trees)
    out = select_trees(n_trees, TreeSubset(strategy, tau=tau, seed=seed))
    assert len(out) == tau
    assert len(set(out.tolist())) == tau
    assert out.tolist() == sorted(out.tolist())
    assert out.min() >= 0 and out.max() < n_trees


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False), min_size=1, max_size=50))
@settings(max_examples=100, deadline=None)
def test_rmse_loop_oracle(ys):
    from treeuq import rmse
    preds = [0.0] * len(ys)
    naive = np.sqrt(sum(y * y for y in ys) / len(ys))
    assert abs(rmse(preds, ys) - naive) <= 1e-9 * max(1.0, naive)
