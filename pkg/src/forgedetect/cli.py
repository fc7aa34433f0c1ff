"""Command-line entry point.

Subcommands: gen-data (synthetic corpus), train (two-stage pipeline),
eval (metrics + per-sample dump), predict (one image), inspect-dct
(per-patch spectrum heatmaps + band statistics).

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, read_sections
from .hierarchy import load_model, predict, save_model
from .imaging import Image, ImageSizeError, PnmParseError, extract_patches, load_pnm, save_pnm
from .keypoints import KeypointFormatError, import_keypoints
from .spectral import SpectrumStats, band_baseline, dct2, normalize_spectrum, nyquist_band_mean
from .synthgen import PERTURB_MODES, TYPE_ORDER, GenSpec, emit_dataset
from .training import (
    DataError,
    FeatureCache,
    TrainConfig,
    evaluate,
    fit_fusion_weights,
    load_dataset,
    train_pipeline,
    train_stage1,
    train_stage2,
    write_metrics_tsv,
    write_predictions_tsv,
)


class UsageError(Exception):
    pass


# config-file key -> (TrainConfig field, parser)
CONFIG_KEYS = {
    "alpha": ("alpha", float),
    "lr.backbone": ("lr_backbone", float),
    "lr.attenfusion": ("lr_attenfusion", float),
    "lr.fusion": ("lr_fusion", float),
    "epochs.stage1": ("epochs_stage1", int),
    "epochs.stage2": ("epochs_stage2", int),
    "attention.heads": ("n_head", int),
    "backbone.dim": ("dim", int),
    "threshold.tau": ("tau", float),
    "clamp.eps": ("clamp_eps", float),
}


def parse_config(text):
    """'key = value' lines with '#' comments -> TrainConfig field overrides."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        field, cast = CONFIG_KEYS[key]
        try:
            overrides[field] = cast(value)
        except ValueError:
            raise UsageError(f"config line {lineno}: bad value {value!r} for {key}") from None
    return overrides


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="forgedetect",
        description="Hierarchical multi-branch face-forgery detection on grayscale images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-real", type=int, default=400)
    p.add_argument("--n-fake-per-type", type=int, default=200)
    p.add_argument("--types", default=",".join(TYPE_ORDER),
                   help="comma-separated forgery types")
    p.add_argument("--perturb", choices=PERTURB_MODES, default="std")
    p.add_argument("--size", type=int, default=192)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--force", action="store_true",
                   help="allow writing into a non-empty directory")

    p = sub.add_parser("train", help="train the two-stage model")
    p.add_argument("--data", required=True, help="dataset root directory")
    p.add_argument("--out-model", required=True, help="checkpoint output path")
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--seed", type=int, help="override training seed")
    p.add_argument("--stage", choices=("1", "2", "all"), default="all")
    p.add_argument("--in-model", help="existing checkpoint (required for --stage 2)")
    p.add_argument("--metrics", help="metrics TSV path (default: <out-model>.metrics.tsv)")

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--out", default="eval", help="output prefix for TSV artifacts")

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--keypoints", help="optional 68-point 'row col' file")

    p = sub.add_parser("inspect-dct", help="emit per-patch spectrum heatmaps")
    p.add_argument("--image", required=True)
    p.add_argument("--stats", required=True,
                   help="checkpoint file carrying spectral.stats sections")
    p.add_argument("--out", required=True, help="output path prefix")
    return parser


def cmd_gen_data(args):
    try:
        spec = GenSpec(
            n_real=args.n_real,
            n_fake_per_type=args.n_fake_per_type,
            types=tuple(t for t in args.types.split(",") if t),
            perturb=args.perturb,
            size=args.size,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = emit_dataset(spec, args.out, force=args.force)
    total = spec.n_real + spec.n_fake_per_type * len(spec.types)
    print(f"wrote {total} images to {args.out} ({manifest['types']}, {spec.perturb})")
    return 0


def _load_config(args):
    overrides = {}
    if args.config:
        overrides = parse_config(Path(args.config).read_text())
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    try:
        return TrainConfig(**overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_train(args):
    cfg = _load_config(args)
    dataset = load_dataset(args.data)
    if args.stage == "all":
        model, _report = train_pipeline(dataset, cfg)
    elif args.stage == "1":
        cache = FeatureCache()
        model, _ = train_stage1(dataset, cfg, cache)
        fit_fusion_weights(dataset.splits["val"], model, cfg, cache, fit_stage2=False)
    else:
        if not args.in_model:
            raise UsageError("--stage 2 requires --in-model with trained stage-1 branches")
        model = load_model(args.in_model)
        cache = FeatureCache()
        train_stage2(dataset, model, cfg, cache)
        fit_fusion_weights(dataset.splits["val"], model, cfg, cache, fit_stage1=False)
    save_model(model, args.out_model)
    metrics, _rows = evaluate(model, dataset.splits["val"])
    metrics_path = args.metrics or f"{args.out_model}.metrics.tsv"
    write_metrics_tsv(metrics_path, "val", metrics)
    print(f"wrote checkpoint {args.out_model} and metrics {metrics_path}")
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    metrics, rows = evaluate(model, dataset.splits[args.split])
    metrics_path = f"{args.out}.metrics.tsv"
    preds_path = f"{args.out}.predictions.tsv"
    write_metrics_tsv(metrics_path, args.split, metrics)
    write_predictions_tsv(preds_path, rows)
    print(f"{args.split}: stage1 acc {metrics['stage1/acc']:.4f}, "
          f"e2e acc {metrics['e2e/acc']:.4f} -> {metrics_path}, {preds_path}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    img = load_pnm(args.image)
    keypoints = None
    if args.keypoints:
        keypoints = import_keypoints(args.keypoints, img.height, img.width)
    result = predict(img, model, keypoints)
    if result.is_fake:
        print(f"fake {result.type_name} S_det={result.s_det:.6f}")
    else:
        print("real")
    return 0


def _load_stats(path):
    sections = read_sections(path)
    try:
        return SpectrumStats(
            mean=sections["spectral.stats.mean"].astype(np.float64),
            var=sections["spectral.stats.var"].astype(np.float64),
            n_samples=int(sections["spectral.stats.count"]),
        )
    except KeyError as exc:
        raise CheckpointError(f"stats file missing section {exc}") from None


def cmd_inspect_dct(args):
    model_stats = _load_stats(args.stats)
    img = load_pnm(args.image)
    grid = extract_patches(img)
    baseline = band_baseline(model_stats)
    band_rows = []
    for i, patch in enumerate(grid.patches):
        coeffs = dct2(patch)
        z = normalize_spectrum(coeffs, model_stats)  # raises on size mismatch
        heat = np.log1p(np.abs(z))
        peak = heat.max()
        if peak > 0:
            heat = heat / peak
        save_pnm(Image(pixels=heat), f"{args.out}.patch{i}.pgm")
        band = nyquist_band_mean(coeffs)
        band_rows.append((i, band, baseline, band / baseline if baseline > 0 else 0.0))
    tsv = f"{args.out}.bands.tsv"
    with open(tsv, "w") as fh:
        fh.write("patch\tnyquist_mean_abs\treal_baseline\tratio\n")
        for i, band, base, ratio in band_rows:
            fh.write(f"{i}\t{band:.10g}\t{base:.10g}\t{ratio:.10g}\n")
    worst = min(r[3] for r in band_rows)
    print(f"wrote 9 heatmaps + {tsv} (min band ratio {worst:.3g})")
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "inspect-dct": cmd_inspect_dct,
}

_RUNTIME_ERRORS = (
    DataError,
    CheckpointError,
    PnmParseError,
    ImageSizeError,
    KeypointFormatError,
    FileExistsError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    ValueError,
)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
