"""From point model to probabilistic prediction.

The ensemble's leaves induce a similarity: how many trees route two
instances to the same leaf. The k most similar training instances give
a variance estimate and, if wanted, a full output distribution.
"""
import numpy as np

from treeuq import (Dataset, PosteriorConfig, TrainConfig, TreeSubset,
                    build_index, compute_affinities, eval_distribution,
                    predict_probabilistic, select_trees, top_k, train)
from treeuq.scenarios import heteroscedastic_data

data, true_var = heteroscedastic_data(n=3000, p=8, seed=1, signal_scale=0.2)
model = train(data, TrainConfig(n_trees=150, max_depth=5, seed=1))
index = build_index(model, data)
trees = select_trees(model.n_trees, TreeSubset("all"))

x = data.features[5]
aff = compute_affinities(x, model, index, trees)
print("affinity counts: max =", aff.counts.max(), "of", aff.n_trees_used,
      "trees; nonzero =", int((aff.counts > 0).sum()), "of", index.n_train)

neighbors = top_k(aff, 31, index.targets)
print("top-31 neighbor target sd:", float(np.std(neighbors.targets, ddof=1)))

for family in ("normal", "laplace", "kde"):
    cfg = PosteriorConfig(k=31, rho=1e-15, family=family)
    pred = predict_probabilistic(x, model, index, trees, cfg)
    at_mu = eval_distribution(pred.dist, pred.mu)
    print(f"{family:8s} mu={pred.mu:+.3f} sigma2={pred.sigma2:.3f} "
          f"pdf(mu)={at_mu['pdf']:.3f} "
          f"90% interval=({pred.dist.ppf(0.05):+.2f}, "
          f"{pred.dist.ppf(0.95):+.2f})")
print("true noise variance at this point:", float(true_var[5]))
