"""Leaf-density diagnostics and the index cache.

Prediction cost scales with the number of training instances stored
at the leaves a target visits, so per-tree leaf density tells you how
expensive affinity computation will be and how much tree subsampling
can save. The leaf index itself can be cached to disk, keyed by a
content hash of the model and training data.
"""
import numpy as np

from treeuq import Dataset, TrainConfig, build_index, leaf_density, train
from treeuq.leaf_index import content_key, load_cache, save_cache

rng = np.random.default_rng(3)
X = rng.uniform(size=(4000, 6))
y = 10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + rng.standard_normal(4000)
data = Dataset(X, y)
probes = Dataset(rng.uniform(size=(300, 6)), np.zeros(300))

for depth in (2, 5, 8):
    model = train(data, TrainConfig(n_trees=60, max_depth=depth, seed=3))
    index = build_index(model, data)
    dens = leaf_density(index, model, probes)
    print(f"depth {depth}: mean leaf occupancy "
          f"{dens.mean():.3f} (min {dens.min():.3f}, max {dens.max():.3f})"
          f" -> ~{dens.mean() * data.n:.0f} instances touched per tree")

# cache round trip: reuse is keyed by content, not by file name
model = train(data, TrainConfig(n_trees=60, max_depth=5, seed=3))
index = build_index(model, data)
key = content_key(model, data)
save_cache("/tmp/demo_index.npz", index, key)
again = load_cache("/tmp/demo_index.npz", key)
print("cache hit:", again is not None,
      "| stale-key load:", load_cache("/tmp/demo_index.npz", "0" * 64))
