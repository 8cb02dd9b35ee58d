import numpy as np
import pytest

from treeuq import Dataset, TrainConfig, train


def random_problem(seed, n=None, p=None, n_trees=None, max_depth=3):
    """A random (dataset, model) pair for oracle comparisons."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(30, 200))
    p = p or int(rng.integers(2, 6))
    n_trees = n_trees or int(rng.integers(1, 12))
    X = rng.normal(size=(n, p))
    y = X[:, 0] * 2.0 + np.sin(X[:, 1]) + 0.3 * rng.normal(size=n)
    data = Dataset(X, y)
    model = train(data, TrainConfig(n_trees=n_trees, learning_rate=0.1,
                                    max_depth=max_depth, seed=seed))
    return data, model


@pytest.fixture
def small_problem():
    return random_problem(1234, n=120, p=4, n_trees=10)
