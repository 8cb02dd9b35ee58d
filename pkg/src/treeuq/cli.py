"""Command-line interface.

Subcommands: train, index, tune, predict, bench, leaf-density.
Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric/fit
error. A JSON config file (--config) supplies defaults for any flag,
using the flag name with dashes replaced by underscores.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import harness, model_io, tuning
from .affinity import TreeSubset, select_trees
from .data import load_csv
from .errors import (FitError, InvalidInputError, NumericError, ParseError,
                     UnsupportedModelError)
from .gbrt import TrainConfig, save_json, train
from .leaf_index import (build_index, content_key, leaf_density,
                         load_cache, save_cache)
from .metrics import write_scores_csv, write_summary_json
from .posterior import (FAMILIES, PosteriorConfig, predict_probabilistic,
                        prediction_record)

SAMPLE_TO_STRATEGY = {"all": "all", "random": "uniform-random",
                      "first": "first-to-last", "last": "last-to-first"}


def _add_model_args(p, with_format=True):
    p.add_argument("--model", required=True, help="model file")
    if with_format:
        p.add_argument("--model-format", default=None,
                       choices=list(model_io.FORMATS),
                       help="dump format (default: sniffed from the file)")


def _load_model(args):
    fmt = getattr(args, "model_format", None) or model_io.sniff_format(args.model)
    return model_io.load_model(args.model, fmt)


def _build_parser():
    ap = argparse.ArgumentParser(prog="treeuq")
    ap.add_argument("--config", default=None,
                    help="JSON file of default values for any flag")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a native model from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-depth", type=int, default=-1,
                   help="-1 means unlimited")
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--subsample", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("index", help="build and cache a leaf index")
    _add_model_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("tune", help="tune k, calibration, and family")
    _add_model_args(p)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--metric", default="nll", choices=["nll", "crps"])
    p.add_argument("--families", nargs="*", default=None,
                   choices=list(FAMILIES))
    p.add_argument("--k-grid", nargs="*", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="JSON-lines probabilistic predictions")
    _add_model_args(p)
    p.add_argument("--train", required=True, help="training CSV for the index")
    p.add_argument("--index", default=None,
                   help="index cache from the `index` subcommand; used when "
                        "its content hash matches, else rebuilt")
    p.add_argument("--data", required=True, help="CSV of rows to predict")
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rho", type=float, default=tuning.DEFAULT_RHO)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--family", default="normal", choices=list(FAMILIES))
    p.add_argument("--tau", type=int, default=None)
    p.add_argument("--tree-sample", default="all",
                   choices=list(SAMPLE_TO_STRATEGY))
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="cross-validation benchmark")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--method", default="ibug-native",
                   choices=list(harness.METHODS))
    p.add_argument("--model", default=None,
                   help="external dump for ibug-external-model")
    p.add_argument("--model-format", default=None,
                   choices=list(model_io.FORMATS))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--metric", default="nll", choices=["nll", "crps"])
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("leaf-density",
                       help="per-tree mean leaf occupancy on probe rows")
    _add_model_args(p)
    p.add_argument("--train", required=True)
    p.add_argument("--probes", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    return ap


def _cmd_train(args) -> int:
    data = load_csv(args.data, args.target)
    cfg = TrainConfig(
        n_trees=args.n_trees, learning_rate=args.learning_rate,
        max_depth=None if args.max_depth == -1 else args.max_depth,
        min_leaf_size=args.min_leaf, lam=args.lam,
        subsample_fraction=args.subsample, seed=args.seed)
    save_json(train(data, cfg), args.out)
    return 0


def _cmd_index(args) -> int:
    model = _load_model(args)
    data = load_csv(args.data, args.target)
    index = build_index(model, data)
    save_cache(args.out, index, content_key(model, data))
    return 0


def _cmd_tune(args) -> int:
    model = _load_model(args)
    train_data = load_csv(args.train, args.target)
    val = load_csv(args.val, args.target)
    index = build_index(model, train_data)
    grids = tuning.CandidateGrids(
        k_grid=tuple(args.k_grid) if args.k_grid else tuning.DEFAULT_K_GRID,
        family_grid=tuple(args.families) if args.families else FAMILIES,
        metric=args.metric)
    trees = select_trees(model.n_trees, TreeSubset("all"))
    result = tuning.tune_all(val, model, index, trees, grids)
    final = tuning.final_validation_scores(val, model, index, trees, result,
                                           grids.metric)
    tuning.write_tune_report(args.out, grids, result, final)
    return 0


def _cmd_predict(args) -> int:
    model = _load_model(args)
    train_data = load_csv(args.train, args.target)
    data = load_csv(args.data, args.target)
    index = None
    if args.index:
        index = load_cache(args.index, content_key(model, train_data))
    if index is None:
        index = build_index(model, train_data)
    spec = TreeSubset(SAMPLE_TO_STRATEGY[args.tree_sample], tau=args.tau,
                      seed=args.seed)
    trees = select_trees(model.n_trees, spec)
    cfg = PosteriorConfig(k=args.k, rho=args.rho, gamma=args.gamma,
                          delta=args.delta, family=args.family)
    with open(args.out, "w") as fh:
        for j in range(data.n):
            pred = predict_probabilistic(data.features[j], model, index,
                                         trees, cfg)
            fh.write(json.dumps(prediction_record(pred)) + "\n")
    return 0


def _cmd_bench(args) -> int:
    data = load_csv(args.data, args.target)
    protocol = harness.Protocol(n_folds=args.folds, seed=args.seed,
                                metric=args.metric)
    external = None
    if args.method == "ibug-external-model":
        if not args.model:
            raise InvalidInputError("--model is required for "
                                    "ibug-external-model")
        fmt = args.model_format or model_io.sniff_format(args.model)
        external = model_io.load_model(args.model, fmt)
    train_cfg = TrainConfig(n_trees=args.n_trees,
                            learning_rate=args.learning_rate,
                            max_depth=None if args.max_depth == -1
                            else args.max_depth, seed=args.seed)
    result = harness.run_cv(data, protocol, method=args.method,
                            grids=tuning.CandidateGrids(metric=args.metric),
                            train_config=train_cfg, external_model=external)
    os.makedirs(args.out_dir, exist_ok=True)
    rows = result.pop("per_instance")
    write_scores_csv(os.path.join(args.out_dir, "scores.csv"), rows)
    write_summary_json(os.path.join(args.out_dir, "summary.json"), result)
    return 0


def _cmd_leaf_density(args) -> int:
    model = _load_model(args)
    train_data = load_csv(args.train, args.target)
    probes = load_csv(args.probes, args.target)
    index = build_index(model, train_data)
    dens = leaf_density(index, model, probes)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tree", "mean_leaf_fraction"])
        for t, d in enumerate(dens):
            w.writerow([t, format(d, ".17g")])
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "index": _cmd_index,
    "tune": _cmd_tune,
    "predict": _cmd_predict,
    "bench": _cmd_bench,
    "leaf-density": _cmd_leaf_density,
}


def cli(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    parser = _build_parser()
    # resolve --config first so its values become flag defaults
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            with open(cfg_path) as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read config {cfg_path}: {e}", file=sys.stderr)
            return 2
        if "lambda" in defaults:  # the --lambda flag parses into dest "lam"
            defaults["lam"] = defaults.pop("lambda")
        for sp in parser._subparsers._group_actions[0].choices.values():
            sp.set_defaults(**defaults)
            for action in sp._actions:
                if action.dest in defaults:
                    action.required = False
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (InvalidInputError, ParseError, UnsupportedModelError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except (FitError, NumericError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
