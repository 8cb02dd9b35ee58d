"""Acceptance suite: one test per criterion, one printed line each.

Criteria 1-9 gate the build. Criterion 10 is informational (needs the
public Wine CSV, which is not bundled; see docs/datasets.md) and skips
when the file is absent. The fixture-regeneration criterion lives in
the fixture_gen package's own test suite.
"""
import json
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

import treeuq as tq
from treeuq.affinity import affinity_order
from treeuq.scenarios import make_scenario
from treeuq.tuning import DEFAULT_RHO

from conftest import random_problem
from fixture_utils import fixture_files
from naive_tuning import naive_tune_k
from test_affinity import brute_force_affinity


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {num} [{name}]: {status} {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


_SCENARIOS = {}


def scenario(name):
    if name not in _SCENARIOS:
        _SCENARIOS[name] = make_scenario(name)
    return _SCENARIOS[name]


def _tune_normal(sc, k_grid=None):
    """k then (gamma, delta) on the scenario's validation split."""
    trees = tq.select_trees(sc.model.n_trees, tq.TreeSubset("all"))
    grids = tq.CandidateGrids(k_grid=k_grid or tq.tuning.DEFAULT_K_GRID,
                              family_grid=("normal",))
    kt = tq.fast_tune_k(sc.val, sc.model, sc.index, grids, trees)
    cal = tq.tune_calibration(sc.val, sc.model, sc.index, trees, kt["k"],
                              grids, rho=kt["rho"])
    cfg = tq.PosteriorConfig(k=kt["k"], rho=kt["rho"], gamma=cal["gamma"],
                             delta=cal["delta"], family="normal")
    return trees, grids, kt, cal, cfg


def test_criterion_1_affinity_oracle():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    for trial in range(50):
        n = int(rng.integers(30, 501))
        n_trees = int(rng.integers(1, 21))
        data, model = random_problem(int(rng.integers(0, 2 ** 31)), n=n,
                                     p=int(rng.integers(2, 6)),
                                     n_trees=n_trees)
        index = tq.build_index(model, data)
        trees = tq.select_trees(model.n_trees, tq.TreeSubset("all"))
        probes = rng.normal(size=(5, data.p))
        for x in probes:
            fast = tq.compute_affinities(x, model, index, trees).counts
            slow = brute_force_affinity(x, model, data, trees)
            if not np.array_equal(fast, slow):
                _report(1, "affinity oracle", False,
                        f"mismatch on trial {trial}")
    elapsed = time.time() - t0
    _report(1, "affinity oracle", elapsed < 30.0,
            f"(50 pairs exact, {elapsed:.1f}s)")


def test_criterion_2_accelerated_tuning_oracle():
    t0 = time.time()
    rng = np.random.default_rng(77)
    for trial in range(10):
        n = int(rng.integers(60, 501))
        data, model = random_problem(int(rng.integers(0, 2 ** 31)), n=n,
                                     p=3, n_trees=int(rng.integers(2, 12)))
        index = tq.build_index(model, data)
        trees = tq.select_trees(model.n_trees, tq.TreeSubset("all"))
        val = tq.Dataset(rng.normal(size=(25, data.p)),
                         rng.normal(size=25) * 2.0)
        ks = tuple(k for k in (3, 7, 15, 61, 301) if k <= n)
        fast = tq.fast_tune_k(val, model, index,
                              tq.CandidateGrids(k_grid=ks), trees)
        naive_k, naive_table = naive_tune_k(val, model, index, list(ks),
                                            trees)
        if fast["k"] != naive_k \
                or np.max(np.abs(fast["scores"] - naive_table)) > 1e-12:
            _report(2, "accelerated tuning oracle", False,
                    f"divergence on trial {trial}")
    elapsed = time.time() - t0
    _report(2, "accelerated tuning oracle", elapsed < 60.0,
            f"(10 problems bitwise, {elapsed:.1f}s)")


def test_criterion_3_crps_correctness():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        mu = float(rng.uniform(-10, 10))
        sigma = float(rng.uniform(0.05, 5.0))
        y = float(mu + sigma * rng.uniform(-4, 4))
        dist = tq.fit_distribution(
            "normal",
            tq.NeighborSet(np.arange(2), np.array([0.0, 1.0]), 2),
            mu, sigma ** 2)
        worst = max(worst, abs(tq.metrics.crps_normal(mu, sigma, y)
                               - tq.crps_quadrature(dist, y)))
    point = tq.metrics.crps_normal(0.0, 1.0, 0.0)
    ok = worst <= 1e-5 and abs(point - 0.23370) <= 1e-4
    _report(3, "CRPS correctness", ok,
            f"(grid max |closed-quad| = {worst:.2e}, "
            f"CRPS(N(0,1),0) = {point:.5f})")


def test_criterion_4_calibration_no_harm():
    details = []
    for name in ("het-friedman", "gaussian-noise", "t3-noise", "dense-leaf"):
        sc = scenario(name)
        trees, grids, kt, cal, _ = _tune_normal(sc)
        ident = next(r for r in cal["table"]
                     if r["gamma"] == 1.0 and r["delta"] == 0.0)
        if cal["mean_score"] > ident["mean"]:
            _report(4, "calibration no-harm", False,
                    f"{name}: tuned {cal['mean_score']:.4f} "
                    f"> identity {ident['mean']:.4f}")
        details.append(f"{name} {cal['mean_score']:.4f}<={ident['mean']:.4f}")
    _report(4, "calibration no-harm", True, "(" + "; ".join(details) + ")")


def test_criterion_5_heteroscedasticity_recovery():
    t0 = time.time()
    sc = scenario("het-friedman")
    trees, grids, kt, cal, cfg = _tune_normal(sc)
    sigma2, covered = [], 0
    for j in range(sc.test.n):
        pred = tq.predict_probabilistic(sc.test.features[j], sc.model,
                                        sc.index, trees, cfg)
        sigma2.append(pred.sigma2)
        lo, hi = pred.dist.ppf(0.05), pred.dist.ppf(0.95)
        covered += lo <= sc.test.targets[j] <= hi
    rho_s = stats.spearmanr(sigma2, sc.true_test_variance).statistic
    coverage = covered / sc.test.n
    elapsed = time.time() - t0
    ok = rho_s >= 0.5 and 0.85 <= coverage <= 0.95 and elapsed < 120.0
    _report(5, "heteroscedasticity recovery", ok,
            f"(spearman = {rho_s:.3f}, coverage = {coverage:.3f}, "
            f"{elapsed:.0f}s)")


def test_criterion_6_tree_subsampling_tradeoff():
    sc = scenario("dense-leaf")
    trees, grids, kt, cal, cfg = _tune_normal(sc, k_grid=(3, 7, 15, 31, 61))
    probes = sc.test.subset(range(150))
    full_tau = sc.model.n_trees
    rows = tq.benchmark_timing(sc.model, sc.index, probes,
                               [full_tau, full_tau // 10], "first-to-last",
                               cfg)
    t_full, t_sub = rows[0]["mean_affinity_time"], rows[1]["mean_affinity_time"]
    nll_full, nll_sub = rows[0]["mean_nll"], rows[1]["mean_nll"]
    speedup = t_full / t_sub
    pred_speedup = rows[0]["mean_pred_time"] / rows[1]["mean_pred_time"]
    delta = nll_sub - nll_full
    ok = speedup >= 3.0 and pred_speedup >= 3.0 and delta <= 0.1
    _report(6, "tree-subsampling trade-off", ok,
            f"(affinity speedup = {speedup:.1f}x, prediction = "
            f"{pred_speedup:.1f}x, NLL delta = {delta:+.4f})")


def test_criterion_7_distribution_fit_recovery():
    rng = np.random.default_rng(123)
    draws = 2.0 * rng.weibull(1.5, size=10000)
    nb = tq.NeighborSet(np.arange(len(draws)), draws, len(draws))
    wb = tq.fit_distribution("weibull", nb, 0.0, 1.0)
    shape_err = abs(wb.params["shape"] - 1.5) / 1.5
    scale_err = abs(wb.params["scale"] - 2.0) / 2.0
    if shape_err > 0.05 or scale_err > 0.05:
        _report(7, "distribution-fit recovery", False,
                f"weibull errors {shape_err:.3f}/{scale_err:.3f}")

    sample = tq.NeighborSet(np.arange(40),
                            rng.gamma(2.0, 1.5, size=40) - 1.0, 40)
    worst_norm, worst_inv = 0.0, 0.0
    for family in tq.FAMILIES:
        dist = tq.fit_distribution(family, sample, 0.8, 1.9)
        lo, hi = float(dist.ppf(1e-10)), float(dist.ppf(1 - 1e-10))
        total, _ = integrate.quad(lambda t: float(dist.pdf(t)), lo, hi,
                                  limit=300)
        worst_norm = max(worst_norm, abs(total - 1.0))
        qs = np.linspace(0.01, 0.99, 23)
        ys = np.asarray(dist.ppf(qs), dtype=np.float64)
        back = np.asarray(dist.ppf(dist.cdf(ys)), dtype=np.float64)
        worst_inv = max(worst_inv, float(np.max(np.abs(back - ys))))
    ok = worst_norm <= 1e-6 and worst_inv <= 1e-8
    _report(7, "distribution-fit recovery", ok,
            f"(weibull {shape_err:.3f}/{scale_err:.3f} rel, "
            f"norm err {worst_norm:.1e}, inv err {worst_inv:.1e})")


def test_criterion_8_family_selection_sanity():
    results = {}
    for name in ("t3-noise", "gaussian-noise"):
        sc = scenario(name)
        trees, grids, kt, cal, cfg = _tune_normal(sc)
        out = tq.select_family(sc.val, sc.model, sc.index, trees, cfg,
                               families=tq.FAMILIES)
        results[name] = out
    t3 = {r["family"]: r["mean_nll"] for r in results["t3-noise"]["table"]}
    heavy_ok = min(t3["student-t"], t3["laplace"]) < t3["normal"]
    gauss = results["gaussian-noise"]
    gtable = {r["family"]: r["mean_nll"] for r in gauss["table"]}
    gauss_ok = gtable["normal"] <= gauss["mean_nll"] + 0.01
    ok = heavy_ok and gauss_ok
    _report(8, "family selection sanity", ok,
            f"(t3 winner = {results['t3-noise']['family']}, "
            f"normal-vs-winner gap under gauss = "
            f"{gtable['normal'] - gauss['mean_nll']:.4f})")


def test_criterion_9_external_model_parity():
    worst = 0.0
    for name, fmt in [("lgbm_small", "lightgbm-text"),
                      ("xgb_small", "xgboost-json")]:
        model_path, inputs, recorded = fixture_files(name)
        model = tq.load_model(model_path, fmt)
        err = float(np.max(np.abs(tq.predict_many(model, inputs) - recorded)))
        worst = max(worst, err)
    _report(9, "external-model parity", worst <= 1e-6,
            f"(max |error| = {worst:.2e})")


def test_criterion_10_wine_anchor_soft():
    path = os.environ.get("TREEUQ_WINE_CSV",
                          str(Path(__file__).parent.parent / "data" /
                              "wine.csv"))
    if not os.path.exists(path):
        print("\nACCEPTANCE 10 [wine anchor, soft]: SKIP "
              "(wine CSV not present; see docs/datasets.md)")
        pytest.skip("wine CSV not available in this environment")
    data = tq.load_csv(path, "quality")
    res = tq.run_cv(data, tq.Protocol(n_folds=10, seed=1, metric="crps"),
                    method="ibug-native",
                    train_config=tq.TrainConfig(n_trees=200, max_depth=7,
                                                learning_rate=0.1, seed=1))
    got = res["aggregate"]["crps"]["mean"]
    anchor = 0.322
    within = abs(got - anchor) <= 0.25 * anchor
    # informational: the base model differs from the published one
    print(f"\nACCEPTANCE 10 [wine anchor, soft]: "
          f"{'PASS' if within else 'INFO'} "
          f"(test CRPS = {got:.3f}, anchor = {anchor}, non-gating)")
