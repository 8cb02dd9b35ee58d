"""Proper scoring rules and calibration diagnostics.

CRPS has two routes: a closed form for the normal family and adaptive
trapezoid quadrature of the CDF definition for everything else. The
quadrature route also accepts normals, which the tests exploit as a
self-consistency oracle.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidInputError, NumericError
from .posterior import FittedDistribution

PDF_FLOOR = 1e-300
DEFAULT_LEVELS = tuple(np.round(np.arange(0.05, 0.951, 0.05), 2))
COVERAGE_LEVELS = DEFAULT_LEVELS  # 19-point grid for MACE


def nll(dist: FittedDistribution, y: float) -> float:
    """Negative log likelihood, pdf floored at 1e-300 before the log."""
    return -float(np.log(max(float(dist.pdf(y)), PDF_FLOOR)))


def crps_normal(mu: float, sigma: float, y: float) -> float:
    """Closed-form CRPS of a normal forecast."""
    z = (y - mu) / sigma
    return sigma * (z * (2.0 * stats.norm.cdf(z) - 1.0)
                    + 2.0 * stats.norm.pdf(z) - 1.0 / np.sqrt(np.pi))


def _adaptive_trapezoid(f, a: float, b: float, tol: float,
                        init: int = 32, max_levels: int = 40) -> float:
    """Integrate f over [a, b] by trapezoid rule with local refinement.

    A segment is accepted when its Richardson error estimate
    |T2 - T1| / 3 is within its width-proportional share of tol.
    """
    if b <= a:
        return 0.0
    width = b - a
    xs = np.linspace(a, b, init + 1)
    fs = f(xs)
    lo, hi = xs[:-1], xs[1:]
    flo, fhi = fs[:-1], fs[1:]
    total = 0.0
    for _ in range(max_levels):
        if lo.size == 0:
            return total
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        h = hi - lo
        t1 = 0.5 * h * (flo + fhi)
        t2 = 0.25 * h * (flo + 2.0 * fmid + fhi)
        err = np.abs(t2 - t1) / 3.0
        done = err <= tol * (h / width)
        total += float(t2[done].sum())
        keep = ~done
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        flo = np.concatenate([flo[keep], fmid[keep]])
        fhi = np.concatenate([fmid[keep], fhi[keep]])
    raise NumericError("adaptive trapezoid quadrature did not converge")


def crps_quadrature(dist: FittedDistribution, y: float,
                    tol: float = 1e-6) -> float:
    """CRPS by quadrature of the definition: integral of
    (F(t) - 1[t >= y])^2 over [q(1e-6), q(1-1e-6)] united with {y}."""
    lo = min(float(dist.ppf(1e-6)), y)
    hi = max(float(dist.ppf(1.0 - 1e-6)), y)
    below = _adaptive_trapezoid(lambda t: np.square(dist.cdf(t)), lo, y, tol / 2)
    above = _adaptive_trapezoid(lambda t: np.square(dist.cdf(t) - 1.0), y, hi,
                                tol / 2)
    return below + above


def crps(dist: FittedDistribution, y: float) -> float:
    if dist.family == "normal":
        return crps_normal(dist.params["loc"], dist.params["scale"], y)
    return crps_quadrature(dist, y)


def check_score(dist: FittedDistribution, y: float, levels=None) -> float:
    """Pinball loss averaged over quantile levels (default 0.05..0.95)."""
    levels = np.asarray(DEFAULT_LEVELS if levels is None else levels,
                        dtype=np.float64)
    if np.any((levels <= 0) | (levels >= 1)):
        raise InvalidInputError("quantile levels must lie in (0, 1)")
    q = np.asarray(dist.ppf(levels), dtype=np.float64)
    return float(np.mean(((y < q).astype(float) - levels) * (q - y)))


def interval_score(dist: FittedDistribution, y: float,
                   alpha: float = 0.1) -> float:
    """Width-plus-penalty score of the central (1-alpha) interval."""
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError("alpha must lie in (0, 1)")
    l = float(dist.ppf(alpha / 2.0))
    u = float(dist.ppf(1.0 - alpha / 2.0))
    return (u - l) + (2.0 / alpha) * max(l - y, 0.0) + \
        (2.0 / alpha) * max(y - u, 0.0)


def calibration_diagnostics(dists, ys) -> dict:
    """MACE over the 19-level central-coverage grid, plus sharpness
    (mean predicted standard deviation).

    The central interval [q((1-p)/2), q((1+p)/2)] contains y exactly
    when |2 F(y) - 1| <= p (continuous strictly monotone cdfs), so one
    cdf evaluation per instance covers every level.
    """
    ys = np.asarray(ys, dtype=np.float64)
    if len(dists) < 20 or len(ys) != len(dists):
        raise InvalidInputError("need >= 20 (distribution, outcome) pairs")
    pit = np.array([float(d.cdf(y)) for d, y in zip(dists, ys)])
    stretch = np.abs(2.0 * pit - 1.0)
    abs_errs = [abs(float(np.mean(stretch <= p)) - p) for p in COVERAGE_LEVELS]
    sharpness = float(np.mean([d.std() for d in dists]))
    return {"mace": float(np.mean(abs_errs)), "sharpness": sharpness}


def rmse(preds, ys) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if preds.shape != ys.shape or preds.ndim != 1 or preds.size < 1:
        raise InvalidInputError("preds and ys must be equal-length 1-D, n >= 1")
    return float(np.sqrt(np.mean((ys - preds) ** 2)))


@dataclass(frozen=True)
class ScoreSummary:
    metric: str
    scores: np.ndarray
    mean: float
    stderr: float


def summarize(metric: str, scores) -> ScoreSummary:
    scores = np.asarray(scores, dtype=np.float64)
    sd = float(scores.std(ddof=1)) if scores.size > 1 else 0.0
    return ScoreSummary(metric, scores, float(scores.mean()),
                        sd / np.sqrt(scores.size))


PER_INSTANCE_METRICS = ("nll", "crps", "check_score", "interval_score",
                        "squared_error")


def score_instance(dist: FittedDistribution, mu: float, y: float) -> dict:
    """All per-instance scores for one (prediction, outcome) pair."""
    return {
        "nll": nll(dist, y),
        "crps": crps(dist, y),
        "check_score": check_score(dist, y),
        "interval_score": interval_score(dist, y),
        "squared_error": float((y - mu) ** 2),
    }


def write_scores_csv(path, per_instance: list[dict]) -> None:
    """Long-format scores: one row per test instance per metric."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "metric", "value"])
        for i, row in enumerate(per_instance):
            for metric in PER_INSTANCE_METRICS:
                writer.writerow([i, metric, format(row[metric], ".17g")])


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
