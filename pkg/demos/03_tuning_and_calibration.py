"""Tune the neighbor count, the variance calibration, and the family.

The k sweep computes affinities once per validation instance and
reuses one descending argsort for every candidate k.
"""
import numpy as np

from treeuq import (CandidateGrids, TrainConfig, TreeSubset, build_index,
                    select_trees, train, tune_all)
from treeuq.scenarios import homoscedastic_data

data = homoscedastic_data(n=2500, p=5, seed=4, noise="t3")
rng = np.random.default_rng(9)
perm = rng.permutation(data.n)
train_d = data.subset(perm[:1800])
val_d = data.subset(perm[1800:])

model = train(train_d, TrainConfig(n_trees=120, max_depth=4, seed=4))
index = build_index(model, train_d)
trees = select_trees(model.n_trees, TreeSubset("all"))

grids = CandidateGrids()  # paper-style defaults: k, gamma, delta, families
result = tune_all(val_d, model, index, trees, grids)

print("chosen k     :", result.k)
print("rho (var floor):", result.rho)
print("gamma, delta :", result.gamma, result.delta)
print("family       :", result.family, "(heavy-tailed noise here)")
print("\nk sweep (mean validation NLL):")
for row in result.val_scores["k"]:
    marker = " <-" if row["k"] == result.k else ""
    print(f"  k={row['k']:4d}  {row['mean']:.4f}{marker}")
print("\nfamily table:")
for row in result.val_scores["family"]:
    flag = " (disqualified)" if row["disqualified"] else ""
    print(f"  {row['family']:11s} mean NLL {row['mean_nll']:.4f}{flag}")
