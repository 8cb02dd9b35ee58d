import json

import numpy as np
import pytest

from treeuq import (CandidateGrids, Dataset, InvalidInputError,
                    KnnBaselineConfig, PosteriorConfig, Protocol, TrainConfig,
                    benchmark_timing, build_index, knn_baseline, knn_predict,
                    load_csv, nll, run_cv, save_csv, select_trees, train,
                    TreeSubset)
from treeuq.harness import fold_indices, inner_split
from treeuq.scenarios import heteroscedastic_data

from conftest import random_problem


def _const_gauss(n, seed, noise_sd=1.3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, (n, 4))
    return Dataset(X, 1.5 + noise_sd * rng.standard_normal(n))


# ---------------------------------------------------------------------------
# CSV ingestion

def test_load_csv_basic(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("a,y\n1.5,2.0\n3.5,4.0\n")
    data = load_csv(f, "y")
    assert data.n == 2 and data.p == 1
    assert data.feature_names == ["a"]
    np.testing.assert_array_equal(data.targets, [2.0, 4.0])


def test_load_csv_missing_cell(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("a,b,y\n1.0,,2.0\n,1.0,3.0\n")
    data = load_csv(f, "y")
    assert np.isnan(data.features[0, 1]) and np.isnan(data.features[1, 0])


def test_load_csv_errors(tmp_path):
    from treeuq import ParseError
    f = tmp_path / "d.csv"
    f.write_text("a,y\noops,2.0\n")
    with pytest.raises(ParseError) as e:
        load_csv(f, "y")
    assert e.value.line == 2
    f.write_text("a,y\n1.0,\n")
    with pytest.raises(InvalidInputError):
        load_csv(f, "y")
    f.write_text("a,y\n1.0,2.0\n")
    with pytest.raises(InvalidInputError):
        load_csv(f, "z")


def test_csv_round_trip_17_digits(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 3)) * np.pi
    X[rng.random(size=X.shape) < 0.2] = np.nan
    data = Dataset(X, rng.normal(size=30) / 3.0)
    f = tmp_path / "rt.csv"
    save_csv(f, data, target_column="t")
    back = load_csv(f, "t")
    np.testing.assert_array_equal(back.targets, data.targets)
    both_nan = np.isnan(back.features) & np.isnan(data.features)
    same = back.features == data.features
    assert np.all(both_nan | same)


# ---------------------------------------------------------------------------
# protocol plumbing

def test_fold_partition_disjoint_covering():
    proto = Protocol(n_folds=10, seed=4)
    folds = fold_indices(100, proto)
    all_test = np.concatenate([t for _, t in folds])
    assert sorted(all_test.tolist()) == list(range(100))
    for tr, te in folds:
        assert set(tr) & set(te) == set()
        assert len(tr) + len(te) == 100


def test_inner_split_derived_and_disjoint():
    proto = Protocol(seed=5)
    tr_idx = np.arange(90)
    a_tr, a_val = inner_split(tr_idx, 0, proto)
    b_tr, b_val = inner_split(tr_idx, 1, proto)
    assert set(a_tr) | set(a_val) == set(range(90))
    assert set(a_tr) & set(a_val) == set()
    assert len(a_val) == 18  # 20% of 90
    assert a_val.tolist() != b_val.tolist()  # re-randomized per fold
    again_tr, again_val = inner_split(tr_idx, 0, proto)
    np.testing.assert_array_equal(a_val, again_val)


def test_run_cv_determinism_bit_identical():
    data = _const_gauss(120, seed=6)
    grids = CandidateGrids(k_grid=(15, 31), family_grid=("normal",))
    kw = dict(protocol=Protocol(n_folds=3, seed=9), method="ibug-native",
              grids=grids,
              train_config=TrainConfig(n_trees=8, max_depth=2, seed=9))
    a = run_cv(data, **kw)
    b = run_cv(data, **kw)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_run_cv_gaussian_entropy_anchor():
    data = _const_gauss(1200, seed=3)
    grids = CandidateGrids(k_grid=(61, 151, 301), family_grid=("normal",))
    res = run_cv(data, Protocol(n_folds=5, seed=2), method="ibug-native",
                 grids=grids,
                 train_config=TrainConfig(n_trees=5, max_depth=1, seed=2))
    H = 0.5 * np.log(2 * np.pi * np.e * 1.3 ** 2)
    agg = res["aggregate"]["nll"]
    assert abs(agg["mean"] - H) <= 3.0 * agg["stderr"]


def test_run_cv_requires_enough_data():
    data = _const_gauss(40, seed=1)
    with pytest.raises(InvalidInputError):
        run_cv(data, Protocol())


def test_run_cv_with_external_model():
    """Wrapping a fixed external dump: the point model stays the same
    across folds while the leaf index and tuning are refit per split."""
    from fixture_utils import fixture_files
    from treeuq import load_model
    model_path, _, _ = fixture_files("xgb_small")
    external = load_model(model_path, "xgboost-json")
    rng = np.random.default_rng(17)
    X = rng.normal(size=(80, external.n_features))
    y = rng.normal(size=80)
    data = Dataset(X, y)
    grids = CandidateGrids(k_grid=(5, 11), family_grid=("normal",))
    res = run_cv(data, Protocol(n_folds=2, seed=5), grids=grids,
                 method="ibug-external-model", external_model=external)
    assert len(res["folds"]) == 2
    assert np.isfinite(res["aggregate"]["nll"]["mean"])
    with pytest.raises(InvalidInputError):
        run_cv(data, Protocol(n_folds=2, seed=5),
               method="ibug-external-model")


# ---------------------------------------------------------------------------
# kNN baseline

def test_knn_global_mean_when_k_is_n():
    rng = np.random.default_rng(11)
    pool = Dataset(rng.normal(size=(50, 6)), rng.normal(size=50))
    cfg = KnnBaselineConfig(k_mean=50, k_var=50, n_top_features=3)
    preds = knn_predict(pool, rng.normal(size=(4, 6)), cfg,
                        train_config=TrainConfig(n_trees=5, max_depth=2,
                                                 seed=0))
    for p in preds:
        assert p.mu == pytest.approx(pool.targets.mean(), abs=1e-12)


def test_knn_duplicate_query_k1_mean():
    rng = np.random.default_rng(12)
    pool = Dataset(rng.normal(size=(40, 3)), rng.normal(size=40))
    cfg = KnnBaselineConfig(k_mean=1, k_var=5, n_top_features=3)
    preds = knn_predict(pool, pool.features[[7]], cfg,
                        train_config=TrainConfig(n_trees=5, max_depth=2,
                                                 seed=0))
    assert preds[0].mu == pytest.approx(pool.targets[7], abs=1e-12)


def test_knn_k_exceeding_pool_rejected():
    rng = np.random.default_rng(13)
    pool = Dataset(rng.normal(size=(20, 3)), rng.normal(size=20))
    with pytest.raises(InvalidInputError):
        knn_predict(pool, pool.features[:2],
                    KnnBaselineConfig(k_mean=21, k_var=5, n_top_features=2))


def test_ibug_beats_knn_on_heteroscedastic_validation():
    data, _ = heteroscedastic_data(n=1200, p=8, seed=5)
    rng = np.random.default_rng(6)
    perm = rng.permutation(data.n)
    tr = data.subset(perm[:800])
    val = data.subset(perm[800:1000])
    test = data.subset(perm[1000:])
    tcfg = TrainConfig(n_trees=80, max_depth=4, seed=6)

    model = train(tr, tcfg)
    index = build_index(model, tr)
    trees = select_trees(model.n_trees, TreeSubset("all"))
    from treeuq import fast_tune_k, tune_calibration
    grids = CandidateGrids(k_grid=(7, 15, 31, 61), family_grid=("normal",))
    kt = fast_tune_k(val, model, index, grids, trees)
    cal = tune_calibration(val, model, index, trees, kt["k"], grids,
                           rho=kt["rho"])
    from treeuq import predict_probabilistic
    cfg = PosteriorConfig(k=kt["k"], rho=kt["rho"], gamma=cal["gamma"],
                          delta=cal["delta"])
    ibug_nll = np.mean([nll(predict_probabilistic(val.features[j], model,
                                                  index, trees, cfg).dist,
                            float(val.targets[j]))
                        for j in range(val.n)])

    _, knn_preds = knn_baseline(tr, val, val, k_grid=[7, 15, 31, 61],
                                train_config=tcfg)
    knn_nll = np.mean([nll(p.dist, float(y))
                       for p, y in zip(knn_preds, val.targets)])
    assert ibug_nll <= knn_nll


# ---------------------------------------------------------------------------
# timing sweep

def test_benchmark_timing_single_tau_matches_full_pipeline():
    data, model = random_problem(31, n=300, p=4, n_trees=12)
    index = build_index(model, data)
    rng = np.random.default_rng(7)
    probes = Dataset(rng.normal(size=(25, 4)), rng.normal(size=25))
    cfg = PosteriorConfig(k=9, rho=1e-15)
    rows = benchmark_timing(model, index, probes, [model.n_trees],
                            "first-to-last", cfg)
    assert len(rows) == 1 and rows[0]["tau"] == model.n_trees

    from treeuq import predict_probabilistic
    trees = select_trees(model.n_trees, TreeSubset("all"))
    want = np.mean([nll(predict_probabilistic(probes.features[j], model,
                                              index, trees, cfg).dist,
                        float(probes.targets[j]))
                    for j in range(probes.n)])
    assert rows[0]["mean_nll"] == pytest.approx(want, abs=0)

    with pytest.raises(InvalidInputError):
        benchmark_timing(model, index, probes, [0], "first-to-last", cfg)
