"""treeuq: probabilistic predictions from any GBRT point predictor.

A trained gradient-boosted regression tree ensemble induces a
similarity between instances: the number of trees in which two
instances share a leaf. This package uses that tree kernel to find the
k training instances most similar to a prediction target, estimates
the predictive variance from their targets (with an affine calibration
tuned on validation data), and fits a configurable output distribution
around the ensemble's point prediction.
"""

from .affinity import (AffinityVector, NeighborSet, TreeSubset,
                       compute_affinities, select_trees, top_k)
from .data import Dataset, load_csv, save_csv
from .errors import (FitError, InvalidInputError, NumericError, ParseError,
                     TreeUQError, UnsupportedModelError)
from .gbrt import (Ensemble, TrainConfig, feature_importance, leaf_path,
                   load_json, predict, predict_many, save_json, train)
from .harness import (KnnBaselineConfig, Protocol, benchmark_timing,
                      knn_baseline, knn_predict, run_cv)
from .leaf_index import LeafIndex, build_index, leaf_density
from .metrics import (calibration_diagnostics, check_score, crps,
                      crps_quadrature, interval_score, nll, rmse)
from .model_io import load_model, parse_model
from .posterior import (FAMILIES, FittedDistribution, PosteriorConfig,
                        PosteriorPrediction, calibrate_variance,
                        eval_distribution, fit_distribution,
                        predict_probabilistic, raw_variance)
from .tuning import (CandidateGrids, TuneResult, fast_tune_k, select_family,
                     tune_all, tune_calibration)

__version__ = "0.1.0"

__all__ = [
    "AffinityVector", "CandidateGrids", "Dataset", "Ensemble", "FAMILIES",
    "FitError", "FittedDistribution", "InvalidInputError", "KnnBaselineConfig",
    "LeafIndex", "NeighborSet", "NumericError", "ParseError",
    "PosteriorConfig", "PosteriorPrediction", "Protocol", "TrainConfig",
    "TreeSubset", "TreeUQError", "TuneResult", "UnsupportedModelError",
    "benchmark_timing", "build_index", "calibrate_variance",
    "calibration_diagnostics", "check_score", "compute_affinities", "crps",
    "crps_quadrature", "eval_distribution", "fast_tune_k",
    "feature_importance", "fit_distribution", "interval_score",
    "knn_baseline", "knn_predict", "leaf_density", "leaf_path", "load_csv",
    "load_json", "load_model", "nll", "parse_model", "predict",
    "predict_many", "predict_probabilistic", "raw_variance", "rmse", "run_cv",
    "save_csv", "save_json", "select_family", "select_trees", "top_k",
    "train", "tune_all", "tune_calibration",
]
