"""Validation-set tuning: neighbor count k (with affinity reuse),
affine variance calibration, and distribution-family selection.

The k sweep computes each validation instance's affinity vector once,
argsorts it once under the same total order top_k uses, and reuses the
prefix for every candidate k, so the per-(instance, k) scores are
bitwise identical to recomputing from scratch.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .affinity import NeighborSet, affinity_order, compute_affinities
from .data import Dataset
from .errors import FitError, InvalidInputError
from .gbrt import Ensemble, predict_many
from .leaf_index import LeafIndex
from .metrics import crps, nll, summarize
from .posterior import FAMILIES, calibrate_variance, fit_distribution

DEFAULT_K_GRID = (3, 5, 7, 9, 11, 15, 31, 61, 91, 121, 151, 201, 301, 401,
                  501, 601, 701)
DEFAULT_RHO = 1e-15


def _log_multiplier_grid(include_zero: bool) -> tuple:
    vals = {m * 10.0 ** e for e in range(-8, 4) for m in (1.0, 2.5, 5.0)}
    if include_zero:
        vals.add(0.0)
    return tuple(sorted(vals))


DEFAULT_GAMMA_GRID = _log_multiplier_grid(include_zero=False)
DEFAULT_DELTA_GRID = _log_multiplier_grid(include_zero=True)


@dataclass(frozen=True)
class CandidateGrids:
    k_grid: tuple = DEFAULT_K_GRID
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    delta_grid: tuple = DEFAULT_DELTA_GRID
    family_grid: tuple = FAMILIES
    metric: str = "nll"

    def __post_init__(self):
        if len(self.k_grid) == 0 or list(self.k_grid) != sorted(self.k_grid):
            raise InvalidInputError("k_grid must be non-empty and ascending")
        if self.metric not in ("nll", "crps"):
            raise InvalidInputError("metric must be 'nll' or 'crps'")
        if 1.0 not in self.gamma_grid and 0.0 not in self.delta_grid:
            raise InvalidInputError(
                "the identity point (gamma=1, delta=0) must be reachable")
        for fam in self.family_grid:
            if fam not in FAMILIES:
                raise InvalidInputError(f"unknown family {fam!r}")


@dataclass(frozen=True)
class TuneResult:
    k: int
    rho: float
    gamma: float
    delta: float
    family: str
    val_scores: dict = field(default_factory=dict)


def _metric_fn(tag: str):
    return nll if tag == "nll" else crps


def _clip_k_grid(k_grid, n_train: int):
    ks = [k for k in k_grid if 2 <= k <= n_train]
    if not ks:
        ks = [min(max(2, k_grid[0]), n_train)]
    return ks


def fast_tune_k(val: Dataset, model: Ensemble, index: LeafIndex,
                grids: CandidateGrids, trees) -> dict:
    """Sweep the k grid with one affinity computation per instance.

    Scores use a normal posterior with gamma=1, delta=0 and the
    minimum-variance floor 1e-15. Returns the chosen k (ties to the
    smaller k), rho (minimum nonzero neighbor variance at the chosen
    k, 1e-15 if all are zero), and the per-(instance, k) score table.
    """
    if val.n < 1:
        raise InvalidInputError("validation set is empty")
    ks = _clip_k_grid(grids.k_grid, index.n_train)
    score = _metric_fn(grids.metric)
    mus = predict_many(model, val.features)
    table = np.empty((val.n, len(ks)))
    raw_vars = np.empty((val.n, len(ks)))
    for j in range(val.n):
        aff = compute_affinities(val.features[j], model, index, trees)
        order = affinity_order(aff)
        for c, k in enumerate(ks):
            ids = order[:k]
            nb = NeighborSet(ids=ids, targets=index.targets[ids], k=k)
            v = max(float(np.var(nb.targets, ddof=1)), DEFAULT_RHO)
            raw_vars[j, c] = v
            dist = fit_distribution("normal", nb, float(mus[j]),
                                    calibrate_variance(v, 1.0, 0.0))
            table[j, c] = score(dist, float(val.targets[j]))
    means = table.mean(axis=0)
    best = int(np.argmin(means))  # first minimum = smallest k
    chosen_vars = raw_vars[:, best]
    nonzero = chosen_vars[chosen_vars > DEFAULT_RHO]
    rho = float(nonzero.min()) if nonzero.size else DEFAULT_RHO
    return {"k": ks[best], "rho": rho, "k_grid": ks, "scores": table,
            "mean_scores": means}


def _val_state(val: Dataset, model: Ensemble, index: LeafIndex, trees, k: int):
    """Per-instance (mu, neighbors, raw variance) at a fixed k."""
    mus = predict_many(model, val.features)
    neighbor_sets, raw = [], np.empty(val.n)
    for j in range(val.n):
        aff = compute_affinities(val.features[j], model, index, trees)
        order = affinity_order(aff)
        ids = order[:k]
        nb = NeighborSet(ids=ids, targets=index.targets[ids], k=k)
        neighbor_sets.append(nb)
        raw[j] = np.var(nb.targets, ddof=1)
    return mus, neighbor_sets, raw


def tune_calibration(val: Dataset, model: Ensemble, index: LeafIndex, trees,
                     k: int, grids: CandidateGrids,
                     rho: float = DEFAULT_RHO) -> dict:
    """Pick (gamma, 0) or (1, delta) by mean validation metric.

    The identity pair is evaluated first and replaced only on strict
    improvement, so the tuned pair never scores worse than identity.
    Scoring uses a normal posterior.
    """
    score = _metric_fn(grids.metric)
    mus, neighbor_sets, raw = _val_state(val, model, index, trees, k)
    floored = np.maximum(raw, rho)
    candidates = [(1.0, 0.0)]
    candidates += [(g, 0.0) for g in grids.gamma_grid if g != 1.0]
    candidates += [(1.0, d) for d in grids.delta_grid if d != 0.0]

    best_pair, best_mean, rows = None, np.inf, []
    for gamma, delta in candidates:
        vals = gamma * floored + delta
        if np.any(vals <= 0):
            continue
        scores = np.empty(val.n)
        for j in range(val.n):
            dist = fit_distribution("normal", neighbor_sets[j], float(mus[j]),
                                    float(vals[j]))
            scores[j] = score(dist, float(val.targets[j]))
        m = float(scores.mean())
        rows.append({"gamma": gamma, "delta": delta, "mean": m,
                     "stderr": summarize(grids.metric, scores).stderr})
        if m < best_mean:
            best_pair, best_mean = (gamma, delta), m
    return {"gamma": best_pair[0], "delta": best_pair[1],
            "mean_score": best_mean, "table": rows}


def select_family(val: Dataset, model: Ensemble, index: LeafIndex, trees,
                  cfg, families=None) -> dict:
    """Family with the lowest mean validation NLL at the tuned config.

    A family failing to fit on more than 1% of validation instances is
    disqualified; ties break to the earlier grid position.
    """
    families = tuple(families) if families is not None else FAMILIES
    if not families:
        raise InvalidInputError("family list is empty")
    mus, neighbor_sets, raw = _val_state(val, model, index, trees, cfg.k)
    sigma2 = cfg.gamma * np.maximum(raw, cfg.rho) + cfg.delta

    best_family, best_mean, rows = None, np.inf, []
    for fam in families:
        nlls, failures = [], 0
        for j in range(val.n):
            try:
                dist = fit_distribution(fam, neighbor_sets[j], float(mus[j]),
                                        float(sigma2[j]))
                nlls.append(nll(dist, float(val.targets[j])))
            except FitError:
                failures += 1
        disqualified = failures > 0.01 * val.n or not nlls
        m = float(np.mean(nlls)) if nlls else np.inf
        rows.append({"family": fam, "mean_nll": m, "failures": failures,
                     "disqualified": disqualified})
        if not disqualified and m < best_mean:
            best_family, best_mean = fam, m
    if best_family is None:
        raise FitError("every candidate family was disqualified")
    return {"family": best_family, "mean_nll": best_mean, "table": rows}


def tune_all(val: Dataset, model: Ensemble, index: LeafIndex, trees,
             grids: CandidateGrids) -> TuneResult:
    """Full tuning pipeline: k first, then (gamma, delta), then the family."""
    from .posterior import PosteriorConfig  # local import avoids a cycle

    k_res = fast_tune_k(val, model, index, grids, trees)
    cal = tune_calibration(val, model, index, trees, k_res["k"], grids,
                           rho=k_res["rho"])
    cfg = PosteriorConfig(k=k_res["k"], rho=k_res["rho"], gamma=cal["gamma"],
                          delta=cal["delta"], family="normal")
    fam = select_family(val, model, index, trees, cfg, grids.family_grid)
    return TuneResult(
        k=k_res["k"], rho=k_res["rho"], gamma=cal["gamma"], delta=cal["delta"],
        family=fam["family"],
        val_scores={
            "k": [{"k": k, "mean": float(m)}
                  for k, m in zip(k_res["k_grid"], k_res["mean_scores"])],
            "calibration": cal["table"],
            "family": fam["table"],
        })


def final_validation_scores(val: Dataset, model: Ensemble, index: LeafIndex,
                            trees, result: TuneResult, metric: str) -> list[float]:
    """Per-instance validation scores at the fully tuned configuration."""
    score = _metric_fn(metric)
    mus, neighbor_sets, raw = _val_state(val, model, index, trees, result.k)
    sigma2 = result.gamma * np.maximum(raw, result.rho) + result.delta
    out = []
    for j in range(val.n):
        dist = fit_distribution(result.family, neighbor_sets[j], float(mus[j]),
                                float(sigma2[j]))
        out.append(score(dist, float(val.targets[j])))
    return out


def write_tune_report(path, grids: CandidateGrids, result: TuneResult,
                      final_scores: list[float] | None = None) -> None:
    doc = {
        "grids": {
            "k": list(grids.k_grid),
            "gamma": list(grids.gamma_grid),
            "delta": list(grids.delta_grid),
            "families": list(grids.family_grid),
            "metric": grids.metric,
        },
        "scores": result.val_scores,
        "chosen": {"k": result.k, "rho": result.rho, "gamma": result.gamma,
                   "delta": result.delta, "family": result.family},
    }
    if final_scores is not None:
        doc["final_validation"] = {
            "per_instance": list(final_scores),
            "mean": float(np.mean(final_scores)),
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
