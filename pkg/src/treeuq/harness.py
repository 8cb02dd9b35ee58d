"""Cross-validation protocol, the Euclidean-kNN baseline, and timing.

The protocol: shuffle once, split into n_folds test partitions; within
each fold the remaining 90% splits 80/20 into train/validation for
tuning (re-randomized per fold via a derived seed), the point model is
then retrained on the whole 90% and the leaf index rebuilt before
scoring the 10% test partition. Tuning and rho never see test data.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .affinity import (NeighborSet, TreeSubset, compute_affinities,
                       select_trees, top_k)
from .data import Dataset
from .errors import InvalidInputError
from .gbrt import (Ensemble, TrainConfig, feature_importance, predict,
                   train)
from .leaf_index import build_index
from .metrics import (calibration_diagnostics, nll, rmse, score_instance,
                      summarize)
from .parallel import parallel_map
from .posterior import (PosteriorConfig, PosteriorPrediction,
                        calibrate_variance, fit_distribution,
                        predict_probabilistic, raw_variance)
from .tuning import DEFAULT_K_GRID, DEFAULT_RHO, CandidateGrids, tune_all

SUMMARY_SCHEMA_VERSION = 1
METHODS = ("ibug-native", "ibug-external-model", "knn-baseline")


@dataclass(frozen=True)
class Protocol:
    n_folds: int = 10
    test_fraction: float = 0.1
    val_fraction_of_train: float = 0.2
    seed: int = 1
    metric: str = "nll"

    def __post_init__(self):
        if self.n_folds < 2:
            raise InvalidInputError("need at least 2 folds")
        for f in (self.test_fraction, self.val_fraction_of_train):
            if not 0.0 < f < 1.0:
                raise InvalidInputError("fractions must lie in (0, 1)")
        if self.metric not in ("nll", "crps"):
            raise InvalidInputError("metric must be 'nll' or 'crps'")


def fold_indices(n: int, protocol: Protocol):
    """Disjoint, covering test partitions plus their complements."""
    rng = np.random.default_rng(protocol.seed)
    perm = rng.permutation(n)
    chunks = np.array_split(perm, protocol.n_folds)
    folds = []
    for f in range(protocol.n_folds):
        test = np.sort(chunks[f])
        train_idx = np.sort(np.concatenate(
            [chunks[g] for g in range(protocol.n_folds) if g != f]))
        folds.append((train_idx, test))
    return folds


def inner_split(train_idx: np.ndarray, fold: int, protocol: Protocol):
    """Per-fold re-randomized train/validation split of the 90%."""
    seed = np.random.SeedSequence([protocol.seed, fold])
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(train_idx))
    n_val = max(1, int(round(protocol.val_fraction_of_train * len(train_idx))))
    return np.sort(train_idx[perm[n_val:]]), np.sort(train_idx[perm[:n_val]])


def _score_test(model, index, trees, cfg: PosteriorConfig, test: Dataset):
    def one(j):
        pred = predict_probabilistic(test.features[j], model, index, trees, cfg)
        row = score_instance(pred.dist, pred.mu, float(test.targets[j]))
        return row, pred
    results = parallel_map(one, range(test.n))
    rows = [r for r, _ in results]
    preds = [p for _, p in results]
    return rows, preds


def _aggregate(rows, preds, test: Dataset) -> dict:
    out = {}
    for metric in ("nll", "crps", "check_score", "interval_score"):
        s = summarize(metric, [r[metric] for r in rows])
        out[metric] = {"mean": s.mean, "stderr": s.stderr}
    out["rmse"] = rmse([p.mu for p in preds], test.targets)
    if test.n >= 20:
        out["calibration"] = calibration_diagnostics(
            [p.dist for p in preds], test.targets)
    return out


def run_cv(data: Dataset, protocol: Protocol, method: str = "ibug-native",
           grids: CandidateGrids | None = None,
           train_config: TrainConfig | None = None,
           external_model: Ensemble | None = None,
           knn_k_grid=None, knn_top_grid=(5, 10, 20)) -> dict:
    """Full cross-validation benchmark; deterministic per seed."""
    if data.n < 50:
        raise InvalidInputError("need at least 50 instances for the protocol")
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; one of {METHODS}")
    if method == "ibug-external-model" and external_model is None:
        raise InvalidInputError("ibug-external-model requires external_model")
    grids = grids or CandidateGrids(metric=protocol.metric)
    train_config = train_config or TrainConfig(n_trees=100, learning_rate=0.1,
                                               max_depth=5, seed=protocol.seed)

    def run_fold(item):
        f, (train_idx, test_idx) = item
        try:
            tr_idx, val_idx = inner_split(train_idx, f, protocol)
            tr, val = data.subset(tr_idx), data.subset(val_idx)
            full, test = data.subset(train_idx), data.subset(test_idx)
            if method == "knn-baseline":
                report, rows, preds = _knn_fold(tr, val, full, test,
                                                train_config, knn_k_grid,
                                                knn_top_grid)
            else:
                report, rows, preds = _ibug_fold(tr, val, full, test, method,
                                                 grids, train_config,
                                                 external_model)
            report["fold"] = f
            report["n_test"] = test.n
            report["metrics"] = _aggregate(rows, preds, test)
            return report, rows
        except Exception as e:
            raise type(e)(f"fold {f} failed: {e}") from e

    # folds are independent; ordered collection keeps output deterministic
    results = parallel_map(run_fold, enumerate(fold_indices(data.n, protocol)))
    fold_reports = [report for report, _ in results]
    per_instance_rows = [row for _, rows in results for row in rows]

    agg = {}
    for metric in ("nll", "crps", "check_score", "interval_score", "rmse"):
        vals = [fr["metrics"][metric]["mean"] if metric != "rmse"
                else fr["metrics"][metric] for fr in fold_reports]
        s = summarize(metric, vals)
        agg[metric] = {"mean": s.mean, "stderr": s.stderr}
    maces = [fr["metrics"]["calibration"]["mace"] for fr in fold_reports
             if "calibration" in fr["metrics"]]
    sharps = [fr["metrics"]["calibration"]["sharpness"] for fr in fold_reports
              if "calibration" in fr["metrics"]]
    if maces:
        agg["calibration"] = {"mace": float(np.mean(maces)),
                              "sharpness": float(np.mean(sharps))}
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "method": method,
        "protocol": {"n_folds": protocol.n_folds,
                     "test_fraction": protocol.test_fraction,
                     "val_fraction_of_train": protocol.val_fraction_of_train,
                     "seed": protocol.seed, "metric": protocol.metric},
        "folds": fold_reports,
        "aggregate": agg,
        "per_instance": per_instance_rows,
    }


def _ibug_fold(tr, val, full, test, method, grids, train_config,
               external_model):
    if method == "ibug-native":
        inner_model = train(tr, train_config)
    else:
        # an external dump cannot be retrained; the instance-based part
        # (the leaf index) is what gets refit on each split
        inner_model = external_model
    inner_index = build_index(inner_model, tr)
    trees = select_trees(inner_model.n_trees, TreeSubset("all"))
    result = tune_all(val, inner_model, inner_index, trees, grids)

    if method == "ibug-native":
        final_model = train(full, train_config)
    else:
        final_model = external_model
    final_index = build_index(final_model, full)
    trees = select_trees(final_model.n_trees, TreeSubset("all"))
    cfg = PosteriorConfig(k=min(result.k, full.n), rho=result.rho,
                          gamma=result.gamma, delta=result.delta,
                          family=result.family)
    rows, preds = _score_test(final_model, final_index, trees, cfg, test)
    report = {"tuned": {"k": result.k, "rho": result.rho,
                        "gamma": result.gamma, "delta": result.delta,
                        "family": result.family}}
    return report, rows, preds


# ---------------------------------------------------------------------------
# Euclidean kNN baseline (standardized features, gain-selected subspace)

@dataclass(frozen=True)
class KnnBaselineConfig:
    k_mean: int
    k_var: int
    n_top_features: int
    standardize: bool = True

    def __post_init__(self):
        if min(self.k_mean, self.k_var, self.n_top_features) < 1:
            raise InvalidInputError("kNN counts must be >= 1")
        if self.k_var < 2:
            raise InvalidInputError("k_var must be >= 2 for a variance")


def _standardizer(X: np.ndarray):
    mean = np.nanmean(X, axis=0)
    sd = np.nanstd(X, axis=0)
    sd[sd <= 0] = 1.0
    return mean, sd


def _neighbor_order(pool: np.ndarray, x: np.ndarray) -> np.ndarray:
    d2 = ((pool - x) ** 2).sum(axis=1)
    return np.argsort(d2, kind="stable")  # ties to the lower id


def knn_baseline(train_data: Dataset, val: Dataset, test: Dataset,
                 k_grid=None, n_top_grid=(5, 10, 20),
                 train_config: TrainConfig | None = None,
                 rho: float = DEFAULT_RHO):
    """Tune (k_mean, k_var, n_top_features) on validation NLL, then
    emit normal probabilistic predictions for the test set.

    Standardization statistics and the feature-importance model come
    from the training split only. Returns (config, predictions) where
    each prediction is (mu, sigma2, dist).
    """
    if k_grid is None:
        k_grid = [k for k in DEFAULT_K_GRID if k <= train_data.n]
    if any(k > train_data.n for k in k_grid):
        raise InvalidInputError("k exceeds the training-set size")
    train_config = train_config or TrainConfig(n_trees=100, learning_rate=0.1,
                                               max_depth=5, seed=0)
    model = train(train_data, train_config)
    imp = feature_importance(model)
    mean, sd = _standardizer(train_data.features)
    Xtr = np.nan_to_num((train_data.features - mean) / sd)
    ytr = train_data.targets

    best = None  # (mean nll, n_top, k_mean, k_var)
    var_grid = [k for k in k_grid if k >= 2]  # a variance needs two points
    for n_top in [min(t, train_data.p) for t in n_top_grid]:
        top = np.argsort(-imp, kind="stable")[:n_top]
        Xv = np.nan_to_num((val.features - mean) / sd)[:, top]
        pool = Xtr[:, top]
        scores = np.zeros((len(k_grid), len(var_grid)))
        for j in range(val.n):
            order = _neighbor_order(pool, Xv[j])
            t_sorted = ytr[order]
            mus = [float(t_sorted[:k].mean()) for k in k_grid]
            vs = [max(float(np.var(t_sorted[:k], ddof=1)), rho)
                  for k in var_grid]
            y = float(val.targets[j])
            for a, mu in enumerate(mus):
                for b, v in enumerate(vs):
                    scores[a, b] += 0.5 * np.log(2 * np.pi * v) \
                        + 0.5 * (y - mu) ** 2 / v
        scores /= val.n
        a, b = np.unravel_index(np.argmin(scores), scores.shape)
        cand = (float(scores[a, b]), n_top, k_grid[a], var_grid[b])
        if best is None or cand[0] < best[0]:
            best = cand
    _, n_top, k_mean, k_var = best
    cfg = KnnBaselineConfig(k_mean=k_mean, k_var=k_var, n_top_features=n_top)
    preds = knn_predict(train_data, test.features, cfg, model=model, rho=rho)
    return cfg, preds


def knn_predict(pool_data: Dataset, X, cfg: KnnBaselineConfig,
                model: Ensemble | None = None,
                train_config: TrainConfig | None = None,
                rho: float = DEFAULT_RHO):
    """Normal predictions for rows of X from a kNN pool."""
    if max(cfg.k_mean, cfg.k_var) > pool_data.n:
        raise InvalidInputError("k exceeds the pool size")
    if model is None:
        train_config = train_config or TrainConfig(
            n_trees=100, learning_rate=0.1, max_depth=5, seed=0)
        model = train(pool_data, train_config)
    imp = feature_importance(model)
    top = np.argsort(-imp, kind="stable")[:min(cfg.n_top_features, pool_data.p)]
    mean, sd = _standardizer(pool_data.features)
    pool = np.nan_to_num((pool_data.features - mean) / sd)[:, top]
    Xs = np.nan_to_num((np.asarray(X, dtype=np.float64) - mean) / sd)[:, top]
    ytr = pool_data.targets
    out = []
    for j in range(Xs.shape[0]):
        order = _neighbor_order(pool, Xs[j])
        ids = order[:cfg.k_var]
        nb = NeighborSet(ids=ids, targets=ytr[ids], k=cfg.k_var)
        mu = float(ytr[order[:cfg.k_mean]].mean())
        v = max(float(np.var(nb.targets, ddof=1)), rho)
        dist = fit_distribution("normal", nb, mu, v)
        out.append(PosteriorPrediction(mu=mu, sigma2=v, dist=dist))
    return out


def _knn_fold(tr, val, full, test, train_config, k_grid, n_top_grid):
    cfg, _ = knn_baseline(tr, val, test, k_grid=k_grid,
                          n_top_grid=n_top_grid, train_config=train_config)
    cfg = KnnBaselineConfig(k_mean=min(cfg.k_mean, full.n),
                            k_var=min(cfg.k_var, full.n),
                            n_top_features=cfg.n_top_features)
    preds = knn_predict(full, test.features, cfg, train_config=train_config)
    rows = [score_instance(p.dist, p.mu, float(y))
            for p, y in zip(preds, test.targets)]
    report = {"tuned": {"k_mean": cfg.k_mean, "k_var": cfg.k_var,
                        "n_top_features": cfg.n_top_features}}
    return report, rows, preds


# ---------------------------------------------------------------------------
# Tree-subsampling timing sweep

def benchmark_timing(model: Ensemble, index, probes: Dataset, tau_grid,
                     strategy: str, cfg: PosteriorConfig,
                     seed: int = 0) -> list[dict]:
    """Per tau: mean wall-clock prediction and affinity time per probe,
    and mean NLL. Runs single-threaded for stable measurements."""
    for tau in tau_grid:
        if not 1 <= tau <= model.n_trees:
            raise InvalidInputError(f"tau={tau} outside [1, {model.n_trees}]")
    rows = []
    for tau in tau_grid:
        trees = select_trees(model.n_trees,
                             TreeSubset(strategy, tau=tau, seed=seed))
        t_aff = 0.0
        nlls = []
        t0 = time.perf_counter()
        for j in range(probes.n):
            x = probes.features[j]
            a0 = time.perf_counter()
            aff = compute_affinities(x, model, index, trees)
            t_aff += time.perf_counter() - a0
            nb = top_k(aff, cfg.k, index.targets)
            sigma2 = calibrate_variance(raw_variance(nb, cfg.rho), cfg.gamma,
                                        cfg.delta)
            dist = fit_distribution(cfg.family, nb, predict(model, x), sigma2)
            nlls.append(nll(dist, float(probes.targets[j])))
        total = time.perf_counter() - t0
        rows.append({"tau": int(tau),
                     "mean_pred_time": total / probes.n,
                     "mean_affinity_time": t_aff / probes.n,
                     "mean_nll": float(np.mean(nlls))})
    return rows


def write_timing_csv(path, rows) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "mean_pred_time", "mean_affinity_time", "mean_nll"])
        for r in rows:
            w.writerow([r["tau"], format(r["mean_pred_time"], ".6e"),
                        format(r["mean_affinity_time"], ".6e"),
                        format(r["mean_nll"], ".17g")])
