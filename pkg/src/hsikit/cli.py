"""Command-line driver: run, compare, bench, convert, inspect.

A run executes load -> split -> reduce -> train -> predict -> evaluate
and writes six fixed-name artifacts into its output directory:

    config.json       the fully resolved configuration snapshot
    report.json       evaluation report plus method label and version
    predictions.json  aligned test pixel indices, truth, predictions
    model.json        reduction model and trained classifier
    map.ppm           classification map of the test pixels
    timings.json      per-stage wall clock in milliseconds

Everything except timings.json is a pure function of (config, seed),
so two identical runs produce byte-identical artifacts; timings.json
is the documented canonicalization cut. Files are written to a
temporary name and renamed into place, and only after the whole
pipeline has succeeded, so a failed stage leaves no partial output.

Exit codes: 0 success, 1 usage (bad flags or config), 2 data error
(unreadable or malformed inputs, degenerate datasets, mismatched
comparisons), 3 numerical failure (factorization non-convergence,
floating-point breakdown).

Configs are JSON with the same shape as the config.json artifact;
command-line flags override file values.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
    GbdtParams,
    SvmParams,
    gbdt_predict,
    gbdt_train,
    grid_search_cv,
    svm_predict,
    svm_train,
)
from .dimred import PcaModel, fit_pca, fit_rpca, transform
from .errors import ConvergenceError, DataFormatError, DegenerateDataError, HsikitError
from .evaluation import evaluate, mcnemar, render_map, write_ppm
from .hsi_data import (
    GroundTruth,
    HsiCube,
    SampleSet,
    extract_labeled,
    load_cube,
    load_ground_truth,
    parse_header,
    save_cube,
    save_ground_truth,
    stratified_split,
)
from .linalg import RandomizedSvdParams, exact_svd, randomized_svd
from .rng import SplitMix64

__all__ = ["main", "run_pipeline", "UsageError", "StageError"]

_ARTIFACTS = ("config", "report", "predictions", "model", "map", "timings")


class UsageError(HsikitError):
    """Bad flags or config; maps to exit code 1."""


class StageError(HsikitError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- configuration -----------------------------------------------------

_SVM_PARAM_DEFAULTS = {"c": 600.0, "gamma": 0.5, "tolerance": 1e-3, "max_iter": 100_000}
_GBDT_PARAM_DEFAULTS = {
    "num_trees": 200,
    "learning_rate": 0.1,
    "max_leaves": 31,
    "min_samples_leaf": 20,
    "num_bins": 64,
    "goss_top_rate": 0.2,
    "goss_other_rate": 0.1,
    "seed": 0,
}


def _as_number(value, name, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"config field {name} must be a {kind.__name__}, got {value!r}")
    if isinstance(out, float) and not math.isfinite(out):
        raise UsageError(f"config field {name} must be finite, got {value!r}")
    return out


def resolve_config(file_config: dict, overrides: dict) -> dict:
    """Merge a config file with flag overrides and fill all defaults.

    The result is the canonical snapshot written to config.json; flags
    win over file values, file values win over defaults.
    """
    cfg = dict(file_config)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    for required in ("cube", "ground_truth"):
        if not cfg.get(required):
            raise UsageError(f"missing required config field '{required}'")
    out = {
        "cube": str(cfg["cube"]),
        "ground_truth": str(cfg["ground_truth"]),
        "output": str(cfg.get("output", "hsikit_run")),
        "train_fraction": _as_number(cfg.get("train_fraction", 0.7), "train_fraction"),
        "seed": _as_number(cfg.get("seed", 0), "seed", int),
    }
    if not 0.0 < out["train_fraction"] < 1.0:
        raise UsageError(f"train_fraction must be in (0, 1), got {out['train_fraction']}")

    reduction = cfg.get("reduction", {"method": "none"})
    if not isinstance(reduction, dict) or "method" not in reduction:
        raise UsageError("config field 'reduction' must be an object with a 'method'")
    method = reduction["method"]
    if method == "none":
        out["reduction"] = {"method": "none"}
    elif method in ("pca", "rpca"):
        k = _as_number(reduction.get("components"), "reduction.components", int)
        if k < 1:
            raise UsageError(f"reduction.components must be >= 1, got {k}")
        entry = {"method": method, "components": k}
        if method == "rpca":
            entry["oversampling"] = _as_number(
                reduction.get("oversampling", 10), "reduction.oversampling", int
            )
            entry["power_iterations"] = _as_number(
                reduction.get("power_iterations", 2), "reduction.power_iterations", int
            )
        out["reduction"] = entry
    else:
        raise UsageError(f"unknown reduction method {method!r} (expected none, pca, rpca)")

    classifier = cfg.get("classifier", {"kind": "svm"})
    if not isinstance(classifier, dict) or "kind" not in classifier:
        raise UsageError("config field 'classifier' must be an object with a 'kind'")
    kind = classifier["kind"]
    raw_params = classifier.get("params", {})
    if kind == "svm":
        defaults = dict(_SVM_PARAM_DEFAULTS)
        unknown = set(raw_params) - set(defaults)
        if unknown:
            raise UsageError(f"unknown svm params: {sorted(unknown)}")
        defaults.update(raw_params)
        params = {
            "c": _as_number(defaults["c"], "svm c"),
            "gamma": _as_number(defaults["gamma"], "svm gamma"),
            "tolerance": _as_number(defaults["tolerance"], "svm tolerance"),
            "max_iter": _as_number(defaults["max_iter"], "svm max_iter", int),
        }
        entry = {"kind": "svm", "params": params, "grid": None}
        grid = classifier.get("grid")
        if grid:
            if grid is True:
                grid = {}
            if not isinstance(grid, dict):
                raise UsageError("classifier.grid must be an object (or true for defaults)")
            entry["grid"] = {
                "c": [float(v) for v in grid.get("c", DEFAULT_C_GRID)],
                "gamma": [float(v) for v in grid.get("gamma", DEFAULT_GAMMA_GRID)],
                "folds": _as_number(grid.get("folds", 5), "grid.folds", int),
            }
        out["classifier"] = entry
    elif kind == "gbdt":
        defaults = dict(_GBDT_PARAM_DEFAULTS)
        unknown = set(raw_params) - set(defaults)
        if unknown:
            raise UsageError(f"unknown gbdt params: {sorted(unknown)}")
        defaults.update(raw_params)
        int_fields = {"num_trees", "max_leaves", "min_samples_leaf", "num_bins", "seed"}
        params = {
            key: _as_number(defaults[key], f"gbdt {key}", int if key in int_fields else float)
            for key in _GBDT_PARAM_DEFAULTS
        }
        out["classifier"] = {"kind": "gbdt", "params": params}
    else:
        raise UsageError(f"unknown classifier kind {kind!r} (expected svm, gbdt)")
    try:
        if kind == "svm":
            SvmParams(**out["classifier"]["params"]).validate()
        else:
            GbdtParams(**out["classifier"]["params"]).validate()
    except ValueError as exc:
        raise UsageError(str(exc))
    return out


def method_label(config: dict) -> str:
    reduction = config["reduction"]
    if reduction["method"] == "none":
        suffix = "original"
    else:
        suffix = f"{reduction['method']}-{reduction['components']}"
    return f"{config['classifier']['kind']}/{suffix}"


# --- artifact IO -------------------------------------------------------


def _canonical_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _write_atomic(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def _load_json(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON ({exc})")


# --- the run pipeline --------------------------------------------------


def run_pipeline(config: dict) -> dict:
    """Execute a resolved config and write artifacts; returns the report.

    Raises StageError around any failing stage; artifacts are only
    written once every stage has succeeded.
    """
    out_dir = Path(config["output"])
    timings = {}
    stage = "load"
    try:
        t0 = time.perf_counter()
        cube = load_cube(config["cube"])
        gt = load_ground_truth(config["ground_truth"])
        samples = extract_labeled(cube, gt)
        timings["load_ms"] = (time.perf_counter() - t0) * 1000.0

        stage = "split"
        train_set, test_set = stratified_split(
            samples, config["train_fraction"], config["seed"]
        )

        stage = "reduce"
        t0 = time.perf_counter()
        reduction = config["reduction"]
        if reduction["method"] == "none":
            pca_model = None
            train_x, test_x = train_set.features, test_set.features
        else:
            if reduction["method"] == "pca":
                pca_model = fit_pca(train_set.features, reduction["components"])
            else:
                pca_model = fit_rpca(
                    train_set.features,
                    reduction["components"],
                    oversampling=reduction["oversampling"],
                    power_iterations=reduction["power_iterations"],
                    seed=config["seed"],
                )
            train_x = transform(pca_model, train_set.features)
            test_x = transform(pca_model, test_set.features)
        timings["reduce_ms"] = (time.perf_counter() - t0) * 1000.0

        stage = "train"
        t0 = time.perf_counter()
        clf = config["classifier"]
        grid_record = None
        if clf["kind"] == "svm":
            params = SvmParams(**clf["params"])
            reduced_train = replace_features(train_set, train_x)
            if clf["grid"]:
                best_c, best_gamma, table = grid_search_cv(
                    reduced_train,
                    c_grid=clf["grid"]["c"],
                    gamma_grid=clf["grid"]["gamma"],
                    folds=clf["grid"]["folds"],
                    seed=config["seed"],
                    tolerance=params.tolerance,
                    max_iter=params.max_iter,
                )
                params = replace(params, c=best_c, gamma=best_gamma)
                grid_record = {"best": {"c": best_c, "gamma": best_gamma}, "table": table}
            model = svm_train(reduced_train, params)
            predictor = svm_predict
        else:
            params = GbdtParams(**clf["params"])
            model = gbdt_train(replace_features(train_set, train_x), params)
            predictor = gbdt_predict
        timings["train_ms"] = (time.perf_counter() - t0) * 1000.0

        stage = "predict"
        t0 = time.perf_counter()
        predicted = predictor(model, test_x)
        timings["predict_ms"] = (time.perf_counter() - t0) * 1000.0

        stage = "evaluate"
        report = evaluate(predicted, test_set.labels, gt.num_classes)
        image = render_map(gt, predicted, test_set.pixel_indices)
    except (HsikitError, ValueError, OSError) as exc:
        raise StageError(stage, exc)

    timings["total_ms"] = sum(timings.values())
    label = method_label(config)
    report_doc = {
        "schema": "hsikit/report/1",
        "toolkit_version": __version__,
        "method": label,
        "n_train": len(train_set),
        "n_test": len(test_set),
        "evaluation": report.to_dict(),
    }
    predictions_doc = {
        "schema": "hsikit/predictions/1",
        "dataset": {"height": gt.height, "width": gt.width, "bands": cube.bands},
        "seed": config["seed"],
        "train_fraction": config["train_fraction"],
        "method": label,
        "pixel_indices": test_set.pixel_indices.tolist(),
        "truth": test_set.labels.tolist(),
        "predicted": predicted.tolist(),
    }
    model_doc = {
        "schema": "hsikit/run-model/1",
        "reduction": None if pca_model is None else pca_model.to_dict(),
        "classifier": {"kind": clf["kind"], "grid": grid_record, "model": model.to_dict()},
    }
    timings_doc = {"schema": "hsikit/timings/1"}
    timings_doc.update({key: round(value, 3) for key, value in timings.items()})

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "config.json", _canonical_json(config))
    _write_atomic(out_dir / "report.json", _canonical_json(report_doc))
    _write_atomic(out_dir / "predictions.json", _canonical_json(predictions_doc))
    _write_atomic(out_dir / "model.json", _canonical_json(model_doc))
    map_tmp = out_dir / "map.ppm.tmp"
    write_ppm(image, map_tmp)
    os.replace(map_tmp, out_dir / "map.ppm")
    _write_atomic(out_dir / "timings.json", _canonical_json(timings_doc))
    return report_doc


def replace_features(samples: SampleSet, features: np.ndarray) -> SampleSet:
    return SampleSet(
        features=features, labels=samples.labels, pixel_indices=samples.pixel_indices
    )


# --- subcommands -------------------------------------------------------


def _cmd_run(args) -> int:
    file_config = {}
    if args.config:
        file_config = _load_json(Path(args.config))
        if not isinstance(file_config, dict):
            raise UsageError(f"{args.config}: config must be a JSON object")
    overrides = {
        "cube": args.cube,
        "ground_truth": args.ground_truth,
        "output": args.output,
        "train_fraction": args.train_fraction,
        "seed": args.seed,
    }
    reduction = _reduction_from_flags(args)
    if reduction is not None:
        overrides["reduction"] = reduction
    classifier = _classifier_from_flags(args)
    if classifier is not None:
        overrides["classifier"] = classifier
    config = resolve_config(file_config, overrides)
    report_doc = run_pipeline(config)
    ev = report_doc["evaluation"]
    print(
        f"{report_doc['method']}: trained on {report_doc['n_train']} pixels, "
        f"tested on {report_doc['n_test']}"
    )
    print(f"overall accuracy {ev['overall_accuracy']:.4f} over {ev['num_classes']} classes")
    print(f"artifacts written to {config['output']}")
    return 0


def _reduction_from_flags(args) -> dict | None:
    if args.reduction is None:
        return None
    if args.reduction == "none":
        return {"method": "none"}
    if args.components is None:
        raise UsageError(f"--reduction {args.reduction} needs --components")
    entry = {"method": args.reduction, "components": args.components}
    if args.reduction == "rpca":
        if args.oversampling is not None:
            entry["oversampling"] = args.oversampling
        if args.power_iterations is not None:
            entry["power_iterations"] = args.power_iterations
    return entry


def _classifier_from_flags(args) -> dict | None:
    svm_flags = {
        "c": args.svm_c,
        "gamma": args.svm_gamma,
    }
    gbdt_flags = {
        "num_trees": args.gbdt_trees,
        "learning_rate": args.gbdt_learning_rate,
        "max_leaves": args.gbdt_max_leaves,
        "min_samples_leaf": args.gbdt_min_samples_leaf,
        "num_bins": args.gbdt_bins,
        "goss_top_rate": args.goss_top_rate,
        "goss_other_rate": args.goss_other_rate,
    }
    svm_set = {k: v for k, v in svm_flags.items() if v is not None}
    gbdt_set = {k: v for k, v in gbdt_flags.items() if v is not None}
    if args.classifier is None and not svm_set and not gbdt_set and not args.svm_grid:
        return None
    kind = args.classifier
    if kind is None:
        if svm_set and gbdt_set:
            raise UsageError("both svm and gbdt flags given; pick --classifier")
        kind = "gbdt" if gbdt_set else "svm"
    if kind == "svm":
        if gbdt_set:
            raise UsageError("gbdt flags are not valid with --classifier svm")
        entry = {"kind": "svm", "params": svm_set}
        if args.svm_grid:
            entry["grid"] = True
        return entry
    if svm_set or args.svm_grid:
        raise UsageError("svm flags are not valid with --classifier gbdt")
    return {"kind": "gbdt", "params": gbdt_set}


def _cmd_compare(args) -> int:
    docs = []
    for run_dir in (args.run_a, args.run_b):
        base = Path(run_dir)
        predictions = _load_json(base / "predictions.json")
        report = _load_json(base / "report.json")
        docs.append((predictions, report))
    (pred_a, rep_a), (pred_b, rep_b) = docs
    for field in ("dataset", "seed", "train_fraction"):
        if pred_a[field] != pred_b[field]:
            raise DataFormatError(
                f"runs are not comparable: {field} differs "
                f"({pred_a[field]!r} vs {pred_b[field]!r})"
            )
    if pred_a["pixel_indices"] != pred_b["pixel_indices"] or pred_a["truth"] != pred_b["truth"]:
        raise DataFormatError("runs are not comparable: test splits differ")
    truth = np.asarray(pred_a["truth"], dtype=np.int64)
    result = mcnemar(
        np.asarray(pred_a["predicted"], dtype=np.int64),
        np.asarray(pred_b["predicted"], dtype=np.int64),
        truth,
    )
    row = {
        "a": {
            "method": pred_a["method"],
            "accuracy": rep_a["evaluation"]["overall_accuracy"],
        },
        "b": {
            "method": pred_b["method"],
            "accuracy": rep_b["evaluation"]["overall_accuracy"],
        },
        "mcnemar": result.to_dict(),
    }
    if args.json:
        sys.stdout.write(_canonical_json(row).decode("utf-8"))
        return 0
    print(f"{'method':<24}{'accuracy':>10}")
    print(f"{row['a']['method']:<24}{row['a']['accuracy']:>10.4f}")
    print(f"{row['b']['method']:<24}{row['b']['accuracy']:>10.4f}")
    verdict = "significant" if result.significant_at_05 else "not significant"
    print(
        f"McNemar b={result.b} c={result.c} statistic={result.statistic:.4f} "
        f"p={result.p_value:.4g} ({result.method}): {verdict} at 0.05"
    )
    return 0


def _decayed_test_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    rng = SplitMix64(seed)
    rank = min(rows, cols)
    decay = 0.95 ** np.arange(rank)
    return rng.normal_matrix(rows, rank) @ (decay[:, None] * rng.normal_matrix(rank, cols))


def _cmd_bench(args) -> int:
    if args.rows < 1 or args.cols < 1:
        raise UsageError("--rows and --cols must be positive")
    k_list = args.k
    if not k_list:
        raise UsageError("--k needs at least one value")
    limit = min(args.rows, args.cols)
    for k in k_list:
        if not 1 <= k <= limit:
            raise UsageError(f"k={k} outside 1..{limit} for a {args.rows}x{args.cols} matrix")
    results = []
    for seed in args.seeds:
        matrix = _decayed_test_matrix(args.rows, args.cols, seed)
        for k in k_list:

            def timed(fn):
                samples = []
                for _ in range(args.repeats):
                    t0 = time.perf_counter()
                    fn()
                    samples.append((time.perf_counter() - t0) * 1000.0)
                return float(np.median(samples))

            exact_ms = timed(lambda: exact_svd(matrix, k))
            params = RandomizedSvdParams(k=k, seed=seed)
            rand_ms = timed(lambda: randomized_svd(matrix, params))
            results.append(
                {
                    "k": k,
                    "seed": seed,
                    "exact_ms": round(exact_ms, 3),
                    "randomized_ms": round(rand_ms, 3),
                }
            )
    doc = {
        "schema": "hsikit/bench/1",
        "rows": args.rows,
        "cols": args.cols,
        "repeats": args.repeats,
        "results": results,
    }
    payload = _canonical_json(doc).decode("utf-8")
    if args.output:
        _write_atomic(Path(args.output), payload.encode("utf-8"))
    sys.stdout.write(payload)
    return 0


_ORDER_AXES = {"bsq": None, "bil": (1, 0, 2), "bip": (2, 0, 1)}


def _cmd_convert(args) -> int:
    if args.height < 1 or args.width < 1 or args.bands < 1:
        raise UsageError("--height, --width, --bands must be positive")
    path = Path(args.input)
    expected = args.height * args.width * args.bands
    if args.dtype == "f32":
        raw = np.fromfile(path, dtype="<f4")
    else:
        raw = np.fromfile(path, dtype="<u2")
    if raw.size != expected:
        raise DataFormatError(
            f"{path}: expected {expected} values for "
            f"{args.height}x{args.width}x{args.bands}, found {raw.size}"
        )
    if args.dtype == "f32":
        if args.order == "bsq":
            values = raw.reshape(args.bands, args.height, args.width)
        elif args.order == "bil":
            values = raw.reshape(args.height, args.bands, args.width).transpose(1, 0, 2)
        else:  # bip
            values = raw.reshape(args.height, args.width, args.bands).transpose(2, 0, 1)
        cube = HsiCube(
            height=args.height,
            width=args.width,
            bands=args.bands,
            values=np.ascontiguousarray(values, dtype=np.float32),
        )
        header = save_cube(cube, args.output)
        print(f"wrote cube {header}")
        return 0
    if args.bands != 1:
        raise UsageError("--dtype u16 (ground truth) requires --bands 1")
    labels = raw.reshape(args.height, args.width)
    top = int(labels.max()) if labels.size else 0
    if args.class_names:
        names = [n.strip() for n in args.class_names.split(",")]
        if len(names) < top:
            raise UsageError(f"labels go up to {top} but only {len(names)} class names given")
    else:
        names = [f"class_{c}" for c in range(1, top + 1)]
    gt = GroundTruth(
        height=args.height, width=args.width, labels=labels.copy(), class_names=names
    )
    header = save_ground_truth(gt, args.output)
    print(f"wrote ground truth {header}")
    return 0


def _cmd_inspect(args) -> int:
    for path in args.paths:
        base = Path(path)
        if _peek_dtype(base) == "f32":
            cube = load_cube(base)
            flat = cube.values
            print(
                f"{base}: hyperspectral cube {cube.height} x {cube.width} pixels, "
                f"{cube.bands} bands"
            )
            print(
                f"  values: min {flat.min():.4f} max {flat.max():.4f} "
                f"mean {flat.mean():.4f} std {flat.std():.4f}"
            )
        else:
            gt = load_ground_truth(base)
            labeled = int(np.sum(gt.labels > 0))
            print(
                f"{base}: ground truth {gt.height} x {gt.width} pixels, "
                f"{gt.num_classes} classes, {labeled} labeled pixels"
            )
            counts = np.bincount(gt.labels.ravel(), minlength=gt.num_classes + 1)
            names = gt.class_names or [f"class_{c}" for c in range(1, gt.num_classes + 1)]
            for cls in range(1, gt.num_classes + 1):
                print(f"  {cls} {names[cls - 1]}: {counts[cls]}")
    return 0


def _peek_dtype(header_path: Path) -> str:
    return parse_header(header_path)["dtype"]


# --- parser / entry point ----------------------------------------------


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hsikit", description="Hyperspectral image classification toolkit")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="execute a classification pipeline", add_help=True)
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("--cube", help="cube header (.hsih)")
    run.add_argument("--gt", dest="ground_truth", help="ground truth header (.hsih)")
    run.add_argument("--output", help="output directory (default hsikit_run)")
    run.add_argument("--train-fraction", type=float, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--reduction", choices=["none", "pca", "rpca"], default=None)
    run.add_argument("--components", type=int, default=None)
    run.add_argument("--oversampling", type=int, default=None)
    run.add_argument("--power-iterations", type=int, default=None)
    run.add_argument("--classifier", choices=["svm", "gbdt"], default=None)
    run.add_argument("--svm-c", type=float, default=None)
    run.add_argument("--svm-gamma", type=float, default=None)
    run.add_argument(
        "--svm-grid", action="store_true", help="cross-validated grid search for (C, gamma)"
    )
    run.add_argument("--gbdt-trees", type=int, default=None)
    run.add_argument("--gbdt-learning-rate", type=float, default=None)
    run.add_argument("--gbdt-max-leaves", type=int, default=None)
    run.add_argument("--gbdt-min-samples-leaf", type=int, default=None)
    run.add_argument("--gbdt-bins", type=int, default=None)
    run.add_argument("--goss-top-rate", type=float, default=None)
    run.add_argument("--goss-other-rate", type=float, default=None)
    run.set_defaults(func=_cmd_run)

    compare = sub.add_parser("compare", help="McNemar's test between two run directories")
    compare.add_argument("run_a")
    compare.add_argument("run_b")
    compare.add_argument("--json", action="store_true", help="machine-readable output")
    compare.set_defaults(func=_cmd_compare)

    bench = sub.add_parser("bench", help="time exact vs randomized SVD")
    bench.add_argument("--rows", type=int, required=True)
    bench.add_argument("--cols", type=int, required=True)
    bench.add_argument("--k", type=_int_list, required=True, help="comma-separated ranks")
    bench.add_argument("--seeds", type=_int_list, default=[0])
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--output", help="also write the JSON report here")
    bench.set_defaults(func=_cmd_bench)

    convert = sub.add_parser("convert", help="raw binary dump to container pair")
    convert.add_argument("--input", required=True, help="flat little-endian binary file")
    convert.add_argument("--height", type=int, required=True)
    convert.add_argument("--width", type=int, required=True)
    convert.add_argument("--bands", type=int, required=True)
    convert.add_argument("--dtype", choices=["f32", "u16"], required=True)
    convert.add_argument("--order", choices=["bsq", "bil", "bip"], default="bsq")
    convert.add_argument("--class-names", help="comma-separated names for ground truth")
    convert.add_argument("--output", required=True, help="output base path (no extension)")
    convert.set_defaults(func=_cmd_convert)

    inspect = sub.add_parser("inspect", help="summarize container files")
    inspect.add_argument("paths", nargs="+")
    inspect.set_defaults(func=_cmd_inspect)
    return parser


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, StageError):
        return exit_code_for(exc.cause)
    if isinstance(exc, UsageError):
        return 1
    if isinstance(exc, (ConvergenceError, FloatingPointError)):
        return 3
    if isinstance(exc, (DataFormatError, DegenerateDataError, ValueError, OSError, MemoryError)):
        return 2
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required (run, compare, bench, convert, inspect)")
        return int(args.func(args) or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (DataFormatError, DegenerateDataError, ValueError, OSError, MemoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
