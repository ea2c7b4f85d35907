"""Command-line entry points.

Subcommands: synth (fixture generator), features, tune, train, predict,
evaluate, and run (full pipeline). Configuration comes from a JSON file;
a few flags override it. Exit codes: 0 success, 2 config error, 3 data
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import kelm, metrics, ssa
from .datacube import (
    HyperCube,
    LabelRaster,
    save_cube,
    save_labels,
    load_labels,
    stratified_split,
)
from .errors import ConfigError, DataError, NumericalError
from .pipeline import (
    build_features,
    load_config,
    make_synthetic_cube,
    render_map,
    run_full,
)


def _config_from_args(args, out_is_output_dir: bool = False):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if out_is_output_dir and getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "train_fraction", None) is not None:
        overrides["train_fraction"] = args.train_fraction
    if getattr(args, "canonical", False):
        overrides["canonical"] = True
    return load_config(args.config, overrides)


def _cmd_synth(args) -> int:
    cube, labels = make_synthetic_cube(
        args.height, args.width, args.bands, args.classes, args.noise_sigma, args.seed
    )
    save_cube(cube, args.out_cube)
    save_labels(labels, args.out_labels)
    print(f"wrote {args.out_cube} ({cube.height}x{cube.width}x{cube.bands}) and {args.out_labels}")
    return 0


def _cmd_run(args) -> int:
    config = _config_from_args(args, out_is_output_dir=True)
    report = run_full(config)
    print(f"oa={report.oa:.4f} aa={report.aa:.4f} kappa={report.kappa:.4f}")
    print(
        f"chosen c={report.chosen_hyperparams.c:.6g} "
        f"gamma={report.chosen_hyperparams.gamma:.6g}"
    )
    print(f"report: {Path(config.output_dir) / 'run_report.json'}")
    return 0


def _cmd_features(args) -> int:
    config = _config_from_args(args)
    bundle = build_features(config)
    h, w = bundle.cube.height, bundle.cube.width
    feature_cube = HyperCube(bundle.fused.reshape(h, w, -1).astype(np.float32))
    save_cube(feature_cube, args.out)
    print(f"wrote {args.out}: {feature_cube.bands} features "
          f"({bundle.spectral_dim} spectral + {bundle.spatial_dim} spatial)")
    return 0


def _train_split(config):
    bundle = build_features(config)
    split = stratified_split(bundle.labels, config.train_fraction, config.seed)
    labels_flat = bundle.labels.labels.ravel().astype(np.int64)
    return bundle, split, labels_flat


def _cmd_tune(args) -> int:
    config = _config_from_args(args)
    bundle, split, labels_flat = _train_split(config)
    result = ssa.tune_kelm(
        bundle.fused[split.train_idx], labels_flat[split.train_idx], config.ssa, folds=config.folds
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "chosen_hyperparams.json").write_text(
        json.dumps({"c": result.hyper.c, "gamma": result.hyper.gamma}, sort_keys=True) + "\n"
    )
    ssa.write_trace_csv(out_dir / "ssa_trace.csv", result.trace_best, result.trace_mean)
    print(f"chosen c={result.hyper.c:.6g} gamma={result.hyper.gamma:.6g} "
          f"fitness={result.best_fitness:.6g} folds={result.folds_used}")
    return 0


def _resolve_hyper(args, config) -> kelm.KelmHyperparams:
    if args.c is not None and args.gamma is not None:
        return kelm.KelmHyperparams(c=args.c, gamma=args.gamma)
    if config.fixed_hyperparams is not None:
        return config.fixed_hyperparams
    raise ConfigError("no hyperparameters: pass --c/--gamma or set fixed_hyperparams in the config")


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    hyper = _resolve_hyper(args, config)
    bundle, split, labels_flat = _train_split(config)
    model = kelm.train(
        bundle.fused[split.train_idx], labels_flat[split.train_idx], hyper,
        num_classes=config.num_classes,
    )
    kelm.save_model(model, args.out)
    print(f"wrote {args.out}: {model.train_x.shape[0]} samples, "
          f"{model.class_ids.size} classes, c={hyper.c:.6g} gamma={hyper.gamma:.6g}")
    return 0


def _cmd_predict(args) -> int:
    config = _config_from_args(args)
    model = kelm.load_model(args.model)
    bundle = build_features(config)
    labeled = bundle.labels.labeled_indices()
    _, pred = kelm.predict(model, bundle.fused[labeled])
    raster = np.zeros(bundle.labels.labels.size, dtype=np.int64)
    raster[labeled] = pred
    raster = raster.reshape(bundle.labels.labels.shape)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    pred_raster = LabelRaster(raster.astype(np.uint16), config.num_classes)
    save_labels(pred_raster, out_dir / "predicted_labels.u16")
    render_map(raster, out_dir / "classification_map.ppm")
    print(f"wrote {out_dir / 'predicted_labels.u16'} and {out_dir / 'classification_map.ppm'}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    truth = load_labels(config.label_path, config.num_classes)
    pred = load_labels(args.pred, config.num_classes)
    if (truth.height, truth.width) != (pred.height, pred.width):
        raise DataError(
            f"prediction raster {pred.height}x{pred.width} does not match "
            f"ground truth {truth.height}x{truth.width}"
        )
    split = stratified_split(truth, config.train_fraction, config.seed)
    t = truth.labels.ravel()[split.test_idx].astype(np.int64)
    p = pred.labels.ravel()[split.test_idx].astype(np.int64)
    cm = metrics.confusion(t, p, config.num_classes)
    oa_v, aa_v, kappa_v = metrics.oa(cm), metrics.aa(cm), metrics.kappa(cm)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_confusion_csv(cm, out_dir / "confusion.csv")
    (out_dir / "metrics.json").write_text(
        json.dumps({"oa": oa_v, "aa": aa_v, "kappa": kappa_v}, sort_keys=True) + "\n"
    )
    print(f"oa={oa_v:.4f} aa={aa_v:.4f} kappa={kappa_v:.4f} (test split of {t.size} pixels)")
    return 0


def _add_config_flags(sub):
    sub.add_argument("--config", required=True, help="path to the JSON config file")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsikelm", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    synth = subs.add_parser("synth", help="generate a synthetic striped cube and labels")
    synth.add_argument("--height", type=int, default=64)
    synth.add_argument("--width", type=int, default=64)
    synth.add_argument("--bands", type=int, default=40)
    synth.add_argument("--classes", type=int, default=5)
    synth.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.1)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out-cube", dest="out_cube", required=True)
    synth.add_argument("--out-labels", dest="out_labels", required=True)
    synth.set_defaults(func=_cmd_synth)

    run = subs.add_parser("run", help="full pipeline: features, tune, train, evaluate")
    _add_config_flags(run)
    run.add_argument("--out", default=None, help="override the config's output directory")
    run.add_argument("--canonical", action="store_true",
                     help="zero timing fields in the report for golden-file comparisons")
    run.set_defaults(func=_cmd_run)

    features = subs.add_parser("features", help="export the fused feature matrix as a cube")
    _add_config_flags(features)
    features.add_argument("--out", required=True, help="destination payload path")
    features.set_defaults(func=_cmd_features)

    tune = subs.add_parser("tune", help="search (C, gamma) on the training split")
    _add_config_flags(tune)
    tune.add_argument("--out", required=True, help="directory for hyperparams JSON and trace CSV")
    tune.set_defaults(func=_cmd_tune)

    train = subs.add_parser("train", help="train a model with given hyperparameters")
    _add_config_flags(train)
    train.add_argument("--c", type=float, default=None)
    train.add_argument("--gamma", type=float, default=None)
    train.add_argument("--out", required=True, help="destination model file")
    train.set_defaults(func=_cmd_train)

    predict = subs.add_parser("predict", help="predict labels for every labeled pixel")
    _add_config_flags(predict)
    predict.add_argument("--model", required=True)
    predict.add_argument("--out", required=True, help="directory for the prediction artifacts")
    predict.set_defaults(func=_cmd_predict)

    evaluate = subs.add_parser("evaluate", help="score a prediction raster on the test split")
    _add_config_flags(evaluate)
    evaluate.add_argument("--pred", required=True)
    evaluate.add_argument("--out", required=True, help="directory for confusion CSV and metrics JSON")
    evaluate.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
