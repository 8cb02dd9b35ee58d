"""Train a small GBRT point model, inspect it, save and reload it."""
import numpy as np

from treeuq import (Dataset, TrainConfig, feature_importance, load_json,
                    predict, predict_many, save_json, train)

rng = np.random.default_rng(0)
n, p = 2000, 6
X = rng.uniform(size=(n, p))
y = 3.0 * X[:, 0] + np.sin(4 * X[:, 1]) + 0.1 * rng.standard_normal(n)

# a few missing cells; the trainer learns a default direction per split
X[rng.random(size=X.shape) < 0.02] = np.nan
data = Dataset(X, y, feature_names=[f"x{i}" for i in range(p)])

model = train(data, TrainConfig(n_trees=150, learning_rate=0.1, max_depth=4,
                                seed=0))
preds = predict_many(model, data.features)
rmse = float(np.sqrt(np.mean((preds - y) ** 2)))
print(f"trained {model.n_trees} trees, training RMSE = {rmse:.4f}")

print("single-row prediction:", predict(model, data.features[0]))

imp = feature_importance(model)
for name, gain in sorted(zip(data.feature_names, imp), key=lambda t: -t[1]):
    print(f"  {name}: total split gain {gain:10.2f}")

save_json(model, "/tmp/demo_model.json")
back = load_json("/tmp/demo_model.json")
print("round-trip prediction drift:",
      float(np.max(np.abs(predict_many(back, X[:100]) - preds[:100]))))
