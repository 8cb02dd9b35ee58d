"""Calibrated probabilistic predictions from a neighbor set.

The pipeline: point prediction mu from the ensemble, raw variance from
the k highest-affinity neighbor targets floored at rho, affine
calibration gamma * sigma2 + delta, then a distribution fit.

Per-family fitting policy:

* normal, laplace, logistic, gumbel: fully determined by (mu, sigma2)
  through the family's variance identity, with the mean anchored at mu
  (for the gumbel this puts the location at mu - euler_gamma * beta).
* student-t: location fixed at mu, tail df fitted by MLE on the
  neighbor targets, scale tied to sigma2 through scale^2 = sigma2 *
  (df - 2) / df; df constrained above 2.01 so the variance exists.
* skewnormal: shape fitted by MLE with mean and variance constrained
  to (mu, sigma2).
* lognormal, weibull: all parameters fitted by MLE on the neighbor
  targets (mean not anchored); when any target is <= 0 the sample is
  shifted by min - 1e-6 * range first and the fitted distribution is
  shifted back.
* kde: one Gaussian kernel per neighbor target with Silverman's
  bandwidth 0.9 * min(sd, IQR/1.34) * k**(-1/5), the mixture shifted
  so its mean equals mu, kernel spread untouched.

Shape fits share one solver: Nelder-Mead simplex descent, at most 500
iterations, relative tolerance 1e-8, moment-based initialization.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .affinity import NeighborSet, compute_affinities, top_k
from .errors import FitError, InvalidInputError
from .gbrt import Ensemble, predict
from .leaf_index import LeafIndex

FAMILIES = ("normal", "skewnormal", "lognormal", "laplace", "student-t",
            "logistic", "gumbel", "weibull", "kde")

_EULER_GAMMA = float(np.euler_gamma)
_MIN_T_DF = 2.01


@dataclass(frozen=True)
class PosteriorConfig:
    k: int
    rho: float = 1e-15
    gamma: float = 1.0
    delta: float = 0.0
    family: str = "normal"

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInputError("k must be >= 2 (variance needs two points)")
        if self.rho <= 0:
            raise InvalidInputError("rho must be > 0")
        if self.gamma <= 0:
            raise InvalidInputError("gamma must be > 0")
        if self.delta < 0:
            raise InvalidInputError("delta must be >= 0")
        if self.family not in FAMILIES:
            raise InvalidInputError(
                f"unknown family {self.family!r}; expected one of {FAMILIES}")


class _Normal:
    """Lightweight normal distribution; frozen scipy objects are too
    costly to build in the tuning loops, which fit one normal per
    (validation instance, candidate)."""

    __slots__ = ("loc", "scale")
    _LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

    def __init__(self, loc: float, scale: float):
        self.loc = float(loc)
        self.scale = float(scale)

    def pdf(self, y):
        z = (np.asarray(y, dtype=np.float64) - self.loc) / self.scale
        return np.exp(-0.5 * z * z - self._LOG_SQRT_2PI) / self.scale

    def cdf(self, y):
        z = (np.asarray(y, dtype=np.float64) - self.loc) / self.scale
        return special.ndtr(z)

    def ppf(self, q):
        return self.loc + self.scale * special.ndtri(
            np.asarray(q, dtype=np.float64))

    def mean(self):
        return self.loc

    def std(self):
        return self.scale

    def support(self):
        return (-np.inf, np.inf)


class _KdeMixture:
    """Equal-weight Gaussian mixture with a common bandwidth."""

    def __init__(self, centers: np.ndarray, bandwidth: float):
        self.centers = np.asarray(centers, dtype=np.float64)
        self.h = float(bandwidth)

    def pdf(self, y):
        z = (np.asarray(y, dtype=np.float64)[..., None] - self.centers) / self.h
        return np.exp(-0.5 * z * z).mean(axis=-1) / (self.h * np.sqrt(2 * np.pi))

    def cdf(self, y):
        z = (np.asarray(y, dtype=np.float64)[..., None] - self.centers) / self.h
        return stats.norm.cdf(z).mean(axis=-1)

    def ppf(self, q):
        q = np.asarray(q, dtype=np.float64)
        scalar = q.ndim == 0
        qs = np.atleast_1d(q)
        out = np.empty_like(qs)
        lo0 = self.centers.min() - 10 * self.h
        hi0 = self.centers.max() + 10 * self.h
        for i, qi in enumerate(qs):
            lo, hi = lo0, hi0
            while self.cdf(lo) > qi:
                lo -= 10 * self.h
            while self.cdf(hi) < qi:
                hi += 10 * self.h
            out[i] = optimize.brentq(lambda t: float(self.cdf(t)) - qi, lo, hi,
                                     xtol=1e-12, rtol=8.9e-16)
        return float(out[0]) if scalar else out

    def mean(self):
        return float(self.centers.mean())

    def std(self):
        return float(np.sqrt(self.centers.var() + self.h * self.h))

    def support(self):
        return (-np.inf, np.inf)


class FittedDistribution:
    """A family tag plus parameters exposing pdf/cdf/quantile.

    Invariants: pdf >= 0, integrates to 1 over the support, cdf is
    non-decreasing with limits 0 and 1, quantile inverts cdf.
    """

    __slots__ = ("family", "params", "_dist")

    def __init__(self, family: str, params: dict, dist):
        self.family = family
        self.params = params
        self._dist = dist

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self._dist.support()
        return float(lo), float(hi)

    def pdf(self, y):
        return self._dist.pdf(y)

    def cdf(self, y):
        return self._dist.cdf(y)

    def ppf(self, q):
        return self._dist.ppf(q)

    def mean(self) -> float:
        return float(self._dist.mean())

    def std(self) -> float:
        return float(self._dist.std())

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items()
                          if k != "centers")
        return f"FittedDistribution({self.family}, {inner})"


def raw_variance(neighbors: NeighborSet, rho: float) -> float:
    """max(unbiased sample variance of neighbor targets, rho)."""
    if neighbors.k < 2:
        raise InvalidInputError("need k >= 2 neighbors for a variance")
    return max(float(np.var(neighbors.targets, ddof=1)), rho)


def calibrate_variance(sigma2: float, gamma: float, delta: float) -> float:
    """Affine variance correction gamma * sigma2 + delta."""
    if sigma2 <= 0:
        raise InvalidInputError("sigma2 must be > 0")
    out = gamma * sigma2 + delta
    if out <= 0:
        raise InvalidInputError("calibrated variance must be > 0")
    return out


def _simplex_mle(nll, x0, name: str):
    """Shared Nelder-Mead driver; FitError carries the last iterate."""
    x0 = np.asarray(x0, dtype=np.float64)
    f0 = float(nll(x0))
    res = optimize.minimize(
        nll, x0, method="Nelder-Mead",
        options=dict(maxiter=500, fatol=1e-8 * max(1.0, abs(f0)),
                     xatol=1e-8 * max(1.0, float(np.max(np.abs(x0))))))
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        raise FitError(f"{name} MLE diverged", last_iterate=res.x)
    if not res.success and res.fun >= f0:
        raise FitError(f"{name} MLE did not converge", last_iterate=res.x)
    return res.x


def _shift_for_positive_support(a: np.ndarray):
    """Spec'd support rule: shift by (min - 1e-6*range) when any value <= 0."""
    if a.min() > 0:
        return a, 0.0
    rng = float(a.max() - a.min())
    shift = float(a.min() - 1e-6 * rng)
    z = a - shift
    if np.any(z <= 0):
        raise FitError("degenerate sample: cannot shift onto positive support")
    return z, shift


def _fit_student_t(a: np.ndarray, mu: float, sigma2: float) -> FittedDistribution:
    # moment init: excess kurtosis 6/(df-4) when df > 4
    kurt = float(stats.kurtosis(a, bias=True)) if len(a) > 3 else 0.0
    df0 = 4.0 + 6.0 / kurt if kurt > 0.05 else 30.0
    df0 = float(np.clip(df0, 2.1, 200.0))

    def scale_of(df):
        return np.sqrt(sigma2 * (df - 2.0) / df)

    def nll(u):
        df = _MIN_T_DF + np.exp(u[0])
        return -stats.t.logpdf(a, df, loc=mu, scale=scale_of(df)).sum()

    u = _simplex_mle(nll, [np.log(df0 - _MIN_T_DF)], "student-t")
    df = _MIN_T_DF + float(np.exp(u[0]))
    scale = float(scale_of(df))
    return FittedDistribution("student-t", {"df": df, "loc": mu, "scale": scale},
                              stats.t(df, loc=mu, scale=scale))


def _skewnorm_from_shape(shape: float, mu: float, sigma2: float):
    delta = shape / np.sqrt(1.0 + shape * shape)
    scale = np.sqrt(sigma2 / (1.0 - 2.0 * delta * delta / np.pi))
    loc = mu - scale * delta * np.sqrt(2.0 / np.pi)
    return loc, scale


def _fit_skewnormal(a: np.ndarray, mu: float, sigma2: float) -> FittedDistribution:
    # moment init from sample skewness (clipped inside the attainable range)
    g1 = float(stats.skew(a, bias=True)) if len(a) > 2 else 0.0
    g1 = float(np.clip(g1, -0.95, 0.95))
    c = (2.0 * abs(g1) / (4.0 - np.pi)) ** (2.0 / 3.0)
    delta0 = np.sign(g1) * np.sqrt(np.pi / 2.0 * c / (1.0 + c)) if g1 else 0.0
    delta0 = float(np.clip(delta0, -0.99, 0.99))
    shape0 = delta0 / np.sqrt(1.0 - delta0 * delta0)

    def nll(u):
        loc, scale = _skewnorm_from_shape(u[0], mu, sigma2)
        return -stats.skewnorm.logpdf(a, u[0], loc=loc, scale=scale).sum()

    u = _simplex_mle(nll, [shape0], "skewnormal")
    shape = float(u[0])
    loc, scale = _skewnorm_from_shape(shape, mu, sigma2)
    return FittedDistribution(
        "skewnormal", {"shape": shape, "loc": float(loc), "scale": float(scale)},
        stats.skewnorm(shape, loc=loc, scale=scale))


def _fit_lognormal(a: np.ndarray) -> FittedDistribution:
    z, shift = _shift_for_positive_support(a)
    logz = np.log(z)
    m = float(logz.mean())
    s = float(logz.std())  # MLE uses the n denominator
    if s <= 0:
        raise FitError("lognormal MLE degenerate: zero log-scale",
                       last_iterate=np.array([m, s]))
    return FittedDistribution(
        "lognormal", {"sigma_log": s, "mu_log": m, "shift": shift},
        stats.lognorm(s, loc=shift, scale=np.exp(m)))


def _fit_weibull(a: np.ndarray) -> FittedDistribution:
    z, shift = _shift_for_positive_support(a)
    zm, zs = float(z.mean()), float(z.std(ddof=1))
    if zs <= 0:
        raise FitError("weibull MLE degenerate: zero spread",
                       last_iterate=np.array([zm, zs]))
    shape0 = float(np.clip((zs / zm) ** -1.086, 0.1, 50.0))
    scale0 = zm / math.gamma(1.0 + 1.0 / shape0)

    def nll(u):
        c, s = np.exp(u[0]), np.exp(u[1])
        return -stats.weibull_min.logpdf(z, c, scale=s).sum()

    u = _simplex_mle(nll, [np.log(shape0), np.log(scale0)], "weibull")
    c, s = float(np.exp(u[0])), float(np.exp(u[1]))
    return FittedDistribution(
        "weibull", {"shape": c, "scale": s, "shift": shift},
        stats.weibull_min(c, loc=shift, scale=s))


def _fit_kde(a: np.ndarray, mu: float) -> FittedDistribution:
    k = len(a)
    sd = float(np.std(a, ddof=1))
    iqr = float(np.percentile(a, 75) - np.percentile(a, 25))
    h = 0.9 * min(sd, iqr / 1.34) * k ** (-0.2)
    if h <= 0:
        h = 0.9 * sd * k ** (-0.2)  # tied quartiles: fall back to sd alone
    if h <= 0:
        raise FitError("KDE degenerate: all neighbor targets identical")
    centers = a + (mu - a.mean())  # anchor the mixture mean, keep the spread
    return FittedDistribution(
        "kde", {"bandwidth": float(h), "centers": centers.tolist()},
        _KdeMixture(centers, h))


def fit_distribution(family: str, neighbors: NeighborSet, mu: float,
                     sigma2: float) -> FittedDistribution:
    """Fit the requested family around (mu, sigma2) per the module policy."""
    if sigma2 <= 0:
        raise InvalidInputError("sigma2 must be > 0")
    if family not in FAMILIES:
        raise InvalidInputError(
            f"unknown family {family!r}; expected one of {FAMILIES}")
    a = np.asarray(neighbors.targets, dtype=np.float64)
    sd = float(np.sqrt(sigma2))

    if family == "normal":
        return FittedDistribution("normal", {"loc": mu, "scale": sd},
                                  _Normal(mu, sd))
    if family == "laplace":
        b = sd / np.sqrt(2.0)  # variance = 2 b^2
        return FittedDistribution("laplace", {"loc": mu, "scale": float(b)},
                                  stats.laplace(mu, b))
    if family == "logistic":
        s = sd * np.sqrt(3.0) / np.pi  # variance = pi^2 s^2 / 3
        return FittedDistribution("logistic", {"loc": mu, "scale": float(s)},
                                  stats.logistic(mu, s))
    if family == "gumbel":
        beta = sd * np.sqrt(6.0) / np.pi  # variance = pi^2 beta^2 / 6
        loc = mu - _EULER_GAMMA * beta    # mean = loc + euler_gamma * beta
        return FittedDistribution("gumbel",
                                  {"loc": float(loc), "scale": float(beta)},
                                  stats.gumbel_r(loc, beta))
    if family == "student-t":
        return _fit_student_t(a, mu, sigma2)
    if family == "skewnormal":
        return _fit_skewnormal(a, mu, sigma2)
    if family == "lognormal":
        return _fit_lognormal(a)
    if family == "weibull":
        return _fit_weibull(a)
    return _fit_kde(a, mu)


def from_params(family: str, params: dict) -> FittedDistribution:
    """Rebuild a FittedDistribution from a serialized parameter dict."""
    if family == "normal":
        return FittedDistribution(family, params,
                                  _Normal(params["loc"], params["scale"]))
    if family == "laplace":
        return FittedDistribution(family, params,
                                  stats.laplace(params["loc"], params["scale"]))
    if family == "logistic":
        return FittedDistribution(family, params,
                                  stats.logistic(params["loc"], params["scale"]))
    if family == "gumbel":
        return FittedDistribution(family, params,
                                  stats.gumbel_r(params["loc"], params["scale"]))
    if family == "student-t":
        return FittedDistribution(family, params,
                                  stats.t(params["df"], loc=params["loc"],
                                          scale=params["scale"]))
    if family == "skewnormal":
        return FittedDistribution(family, params,
                                  stats.skewnorm(params["shape"], loc=params["loc"],
                                                 scale=params["scale"]))
    if family == "lognormal":
        return FittedDistribution(family, params,
                                  stats.lognorm(params["sigma_log"],
                                                loc=params["shift"],
                                                scale=np.exp(params["mu_log"])))
    if family == "weibull":
        return FittedDistribution(family, params,
                                  stats.weibull_min(params["shape"],
                                                    loc=params["shift"],
                                                    scale=params["scale"]))
    if family == "kde":
        return FittedDistribution(family, params,
                                  _KdeMixture(np.asarray(params["centers"]),
                                              params["bandwidth"]))
    raise InvalidInputError(f"unknown family {family!r}")


def eval_distribution(dist: FittedDistribution, y: float) -> dict:
    """pdf and cdf at y (pdf 0 / cdf in {0,1} outside the support)."""
    return {"pdf": float(dist.pdf(y)), "cdf": float(dist.cdf(y))}


@dataclass(frozen=True)
class PosteriorPrediction:
    mu: float
    sigma2: float
    dist: FittedDistribution


def predict_probabilistic(x, model: Ensemble, index: LeafIndex, trees,
                          cfg: PosteriorConfig) -> PosteriorPrediction:
    """Full pipeline: point prediction, neighbors, calibrated variance,
    distribution fit."""
    mu = predict(model, x)
    aff = compute_affinities(x, model, index, trees)
    neighbors = top_k(aff, cfg.k, index.targets)
    sigma2 = calibrate_variance(raw_variance(neighbors, cfg.rho),
                                cfg.gamma, cfg.delta)
    dist = fit_distribution(cfg.family, neighbors, mu, sigma2)
    return PosteriorPrediction(mu=mu, sigma2=sigma2, dist=dist)


PREDICTION_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def prediction_record(pred: PosteriorPrediction) -> dict:
    """One JSON-lines output record for a prediction."""
    return {
        "mu": pred.mu,
        "sigma2": pred.sigma2,
        "family": pred.dist.family,
        "params": pred.dist.params,
        "quantiles": {str(q): float(pred.dist.ppf(q))
                      for q in PREDICTION_QUANTILES},
    }


def write_predictions_jsonl(path, preds) -> None:
    with open(path, "w") as fh:
        for pred in preds:
            fh.write(json.dumps(prediction_record(pred)) + "\n")
