"""Command-line pipeline: generate phantoms, train, build templates,
explain, evaluate, and render overlays.

Every run writes a ``run.meta`` (or ``<output>.meta`` for single-file
commands): a flat key=value file echoing all resolved parameters and
seeds, from which the run can be reproduced. Exit codes: 0 success,
1 usage, 2 data or parse failure, 3 numeric failure. Flags can also be
supplied through ``--config FILE`` (key=value per line, keys are the
long flag names without dashes); explicitly passed flags win.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from . import __version__
from .attribution import (
    grad_cam,
    integrated_gradients,
    mean_reference_image,
    read_importance,
    saliency_map,
    write_importance,
    write_importance_pgm,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import load_image, load_samples, read_manifest, split, write_manifest
from .errors import DataError, NumericError, ParseError
from .metrics import (
    auprc,
    auroc,
    bootstrap_se,
    classification_metrics,
    explanation_quality,
    select_cutoff,
    write_aggregate_report,
    write_pr_csv,
    write_roc_csv,
    write_sample_report,
)
from .netpbm import read_pbm, read_pgm, write_pbm, write_ppm
from .nn import ConvBlockSpec, ModelConfig
from .phantom import PhantomSpec, generate_phantoms
from .template import GUIDE_MODES, build_template, extract_focus, guide
from .training import TrainConfig, predict_proba, train, write_history

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

METHODS = ("saliency", "gradcam", "ig")

# Overlay palette: ground truth adds to green, the baseline focus region
# to red, the guided region to blue; intersections are additive, clipped.
OVERLAY_BOOST = 112


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _require_file(path, what: str) -> str:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"{what} not found: {path}")
    return path


def _format_meta_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_meta_value(v) for v in value)
    return str(value)


def write_run_meta(path, command: str, params: dict) -> None:
    with open(path, "w") as fh:
        fh.write(f"command={command}\n")
        fh.write(f"tgxai_version={__version__}\n")
        for key in sorted(params):
            fh.write(f"{key}={_format_meta_value(params[key])}\n")


def read_run_meta(path) -> dict[str, str]:
    meta = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"line {lineno}: expected key=value", path=path)
            key, value = line.split("=", 1)
            meta[key] = value
    return meta


def _parse_ratio_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(part.strip() for part in text.split(",") if part.strip())
    for m in methods:
        if m not in METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
    if not methods:
        raise argparse.ArgumentTypeError("at least one method required")
    return methods


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill args from a key=value file; values given on the command line win."""
    if not getattr(args, "config", None):
        return
    path = _require_file(args.config, "config file")
    actions = {a.dest: a for a in parser._actions}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"line {lineno}: expected key=value", path=path)
            key, value = (part.strip() for part in line.split("=", 1))
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "command"):
                raise DataError(f"unknown config key {key!r} in {path} (line {lineno})")
            if getattr(args, dest) != parser.get_default(dest):
                continue  # explicitly set on the command line
            action = actions[dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                parsed = value.lower() in ("1", "true", "yes")
            elif isinstance(action, argparse._AppendAction):
                parsed = [
                    (action.type or str)(part) for part in value.split(",") if part
                ]
            else:
                try:
                    parsed = (action.type or str)(value)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise DataError(f"bad value for config key {key!r} in {path}: {exc}") from None
            setattr(args, dest, parsed)


# ---------------------------------------------------------------------------
# generate-synthetic

def cmd_generate_synthetic(args) -> int:
    spec = PhantomSpec(
        n_samples=args.n_samples,
        seed=args.seed,
        side=args.side,
        positive_rate=args.positive_rate,
        noise=args.noise,
        off_template_rate=args.off_template_rate,
    )
    os.makedirs(args.out, exist_ok=True)
    rows = generate_phantoms(spec, args.out)
    write_manifest(os.path.join(args.out, "manifest.csv"), rows)
    ratios = args.split
    if len(ratios) != 3:
        raise DataError(f"--split needs three ratios, got {ratios}")
    train_rows, val_rows, test_rows = split(rows, ratios, seed=args.split_seed)
    for name, part in (("train", train_rows), ("val", val_rows), ("test", test_rows)):
        write_manifest(os.path.join(args.out, f"{name}.csv"), part)
    write_run_meta(
        os.path.join(args.out, "run.meta"),
        "generate-synthetic",
        {
            "out": args.out,
            "n_samples": args.n_samples,
            "seed": args.seed,
            "side": args.side,
            "positive_rate": args.positive_rate,
            "noise": args.noise,
            "off_template_rate": args.off_template_rate,
            "split": ratios,
            "split_seed": args.split_seed,
            "n_positive": sum(r.label for r in rows),
        },
    )
    print(f"wrote {len(rows)} phantoms ({sum(r.label for r in rows)} positive) to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# train

def _model_config_from_args(args, height: int, width: int, channels: int) -> ModelConfig:
    blocks = tuple(ConvBlockSpec(filters=f) for f in args.filters)
    return ModelConfig(in_channels=channels, height=height, width=width, blocks=blocks)


def cmd_train(args) -> int:
    train_rows, train_base = read_manifest(_require_file(args.train_manifest, "training manifest"))
    val_rows, val_base = read_manifest(_require_file(args.val_manifest, "validation manifest"))
    train_images, train_labels, _ = load_samples(train_rows, train_base)
    val_images, val_labels, _ = load_samples(val_rows, val_base)

    channels, height, width = train_images.shape[1:]
    model_config = _model_config_from_args(args, height, width, channels)
    pos_weight = None if args.pos_weight == "auto" else float(args.pos_weight)
    config = TrainConfig(
        learning_rate=args.learning_rate,
        momentum=args.momentum,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        pos_weight=pos_weight,
        weighted_validation=args.weighted_validation,
        seed=args.seed,
    )
    net, history = train(train_images, train_labels, val_images, val_labels, model_config, config)

    os.makedirs(args.out, exist_ok=True)
    save_checkpoint(net, os.path.join(args.out, "model.xgd1"))
    write_history(os.path.join(args.out, "history.csv"), history)
    reference = mean_reference_image(train_images)
    if reference.shape[0] == 1:
        write_importance(os.path.join(args.out, "reference.xim"), reference[0])
    else:
        for c in range(reference.shape[0]):
            write_importance(os.path.join(args.out, f"reference_c{c}.xim"), reference[c])

    n_pos = int(train_labels.sum())
    resolved_pos_weight = pos_weight if pos_weight is not None else (len(train_labels) - n_pos) / n_pos
    best = max((h for h in history if h.improved), key=lambda h: h.epoch, default=None)
    write_run_meta(
        os.path.join(args.out, "run.meta"),
        "train",
        {
            "train_manifest": args.train_manifest,
            "val_manifest": args.val_manifest,
            "out": args.out,
            "filters": args.filters,
            "learning_rate": args.learning_rate,
            "momentum": args.momentum,
            "batch_size": args.batch_size,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
            "pos_weight": resolved_pos_weight,
            "weighted_validation": args.weighted_validation,
            "seed": args.seed,
            "epochs_run": len(history),
            "best_epoch": best.epoch if best else 0,
        },
    )
    print(
        f"trained {len(history)} epochs (best epoch {best.epoch if best else 0}, "
        f"val loss {best.val_loss:.6f})" if best else f"trained {len(history)} epochs"
    )
    return 0


# ---------------------------------------------------------------------------
# make-template

def cmd_make_template(args) -> int:
    annotation = read_pbm(_require_file(args.annotation, "annotation mask"))
    template = build_template(annotation, radius=args.radius, flip=not args.no_flip)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    write_pbm(args.out, template)
    write_run_meta(
        args.out + ".meta",
        "make-template",
        {
            "annotation": args.annotation,
            "out": args.out,
            "radius": args.radius,
            "flip": not args.no_flip,
            "template_pixels": int(template.sum()),
        },
    )
    print(f"template {args.out}: {int(template.sum())} pixels set")
    return 0


# ---------------------------------------------------------------------------
# explain

def _explain_one(net, base, out_dir, row, methods, templates, reference, vstar, mode, ig_steps):
    image = load_image(os.path.join(base, row.path))
    sample_dir = os.path.join(out_dir, row.sample_id)
    os.makedirs(sample_dir, exist_ok=True)
    for method in methods:
        if method == "saliency":
            importance = saliency_map(net, image)
        elif method == "gradcam":
            importance = grad_cam(net, image)
        else:
            importance = integrated_gradients(net, image, reference, steps=ig_steps)
        # Downstream math consumes the float32 sidecar, so threshold the
        # same values that land on disk.
        importance = importance.astype("<f4").astype(float)
        write_importance(os.path.join(sample_dir, f"{method}.xim"), importance)
        write_importance_pgm(os.path.join(sample_dir, f"{method}.pgm"), importance)
        write_pbm(
            os.path.join(sample_dir, f"{method}_focus.pbm"),
            extract_focus(importance, vstar),
        )
        for stem, template in templates:
            write_pbm(
                os.path.join(sample_dir, f"{method}_guided_{stem}.pbm"),
                guide(importance, template, vstar, mode=mode),
            )


def cmd_explain(args) -> int:
    net = load_checkpoint(_require_file(args.model, "model checkpoint"))
    rows, base = read_manifest(_require_file(args.manifest, "manifest"))
    methods = args.methods

    templates = []
    for path in args.template or []:
        mask = read_pbm(_require_file(path, "template"))
        if mask.shape != (net.config.height, net.config.width):
            raise DataError(
                f"template {path} is {mask.shape[1]}x{mask.shape[0]}, model expects "
                f"{net.config.width}x{net.config.height}"
            )
        stem = os.path.splitext(os.path.basename(path))[0]
        if any(s == stem for s, _ in templates):
            raise DataError(f"duplicate template stem {stem!r}; rename one of the files")
        templates.append((stem, mask))

    reference = None
    if "ig" in methods:
        if not args.reference:
            raise DataError("--reference is required when the ig method is requested")
        ref_map = read_importance(_require_file(args.reference, "reference image"))
        if net.config.in_channels != 1:
            raise DataError("a single-channel reference is required for this model")
        if ref_map.shape != (net.config.height, net.config.width):
            raise DataError(
                f"reference {args.reference} is {ref_map.shape[1]}x{ref_map.shape[0]}, model "
                f"expects {net.config.width}x{net.config.height}"
            )
        reference = ref_map[None]

    if args.all_samples:
        selected = rows
    else:
        selected = [r for r in rows if r.label == 1 and r.mask_path]
    if not selected:
        raise DataError(f"no samples to explain in {args.manifest} (try --all-samples)")

    os.makedirs(args.out, exist_ok=True)

    def work(row):
        try:
            _explain_one(
                net, base, args.out, row, methods, templates, reference,
                args.vstar, args.guide_mode, args.ig_steps,
            )
        except ValueError as exc:
            raise DataError(f"sample {row.path}: {exc}") from exc

    if args.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.workers) as pool:
            for _ in pool.map(work, selected):
                pass
    else:
        for row in selected:
            work(row)

    write_run_meta(
        os.path.join(args.out, "run.meta"),
        "explain",
        {
            "model": args.model,
            "manifest": args.manifest,
            "out": args.out,
            "methods": methods,
            "templates": [path for path in (args.template or [])],
            "template_stems": [stem for stem, _ in templates],
            "vstar": args.vstar,
            "guide_mode": args.guide_mode,
            "ig_steps": args.ig_steps,
            "reference": args.reference,
            "all_samples": args.all_samples,
            "workers": args.workers,
            "n_explained": len(selected),
        },
    )
    print(f"explained {len(selected)} samples x {len(methods)} methods into {args.out}")
    return 0


# ---------------------------------------------------------------------------
# evaluate-classifier

def _metric_or_undefined(value) -> str:
    return "undefined" if value is None else repr(value)


def cmd_evaluate_classifier(args) -> int:
    net = load_checkpoint(_require_file(args.model, "model checkpoint"))
    val_rows, val_base = read_manifest(_require_file(args.val_manifest, "validation manifest"))
    test_rows, test_base = read_manifest(_require_file(args.test_manifest, "test manifest"))
    val_images, val_labels, _ = load_samples(val_rows, val_base)
    test_images, test_labels, _ = load_samples(test_rows, test_base)

    val_scores = predict_proba(net, val_images)
    test_scores = predict_proba(net, test_images)
    cutoff = select_cutoff(val_scores, val_labels)

    point = {
        "auroc": auroc(test_scores, test_labels),
        "auprc": auprc(test_scores, test_labels),
    }
    point.update(classification_metrics(test_scores, test_labels, cutoff))

    pairs = np.column_stack([test_scores, test_labels.astype(float)])

    def stat(name):
        def compute(resampled):
            s, y = resampled[:, 0], resampled[:, 1]
            if name == "auroc":
                return auroc(s, y)
            if name == "auprc":
                return auprc(s, y)
            value = classification_metrics(s, y, cutoff)[name]
            if value is None:
                raise ValueError(f"{name} undefined on resample")
            return value

        return compute

    ses = {}
    for name in point:
        if point[name] is None:
            ses[name] = None
        else:
            ses[name] = bootstrap_se(pairs, stat(name), args.bootstrap, args.seed)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "metrics.csv"), "w", newline="") as fh:
        fh.write("metric,value,se\n")
        for name in ("auroc", "auprc", "accuracy", "sensitivity", "specificity", "ppv", "npv"):
            fh.write(f"{name},{_metric_or_undefined(point[name])},{_metric_or_undefined(ses[name])}\n")
    write_roc_csv(os.path.join(args.out, "roc.csv"), test_scores, test_labels)
    write_pr_csv(os.path.join(args.out, "pr.csv"), test_scores, test_labels)
    write_run_meta(
        os.path.join(args.out, "run.meta"),
        "evaluate-classifier",
        {
            "model": args.model,
            "val_manifest": args.val_manifest,
            "test_manifest": args.test_manifest,
            "out": args.out,
            "bootstrap": args.bootstrap,
            "seed": args.seed,
            "cutoff": cutoff,
        },
    )
    print(f"test AUROC {point['auroc']:.4f}, cutoff {cutoff:.6f}")
    return 0


# ---------------------------------------------------------------------------
# evaluate-explanations

def cmd_evaluate_explanations(args) -> int:
    explained_meta = read_run_meta(
        _require_file(os.path.join(args.explained, "run.meta"), "explain run metadata")
    )
    methods = tuple(m for m in explained_meta.get("methods", "").split(",") if m)
    stems = tuple(s for s in explained_meta.get("template_stems", "").split(",") if s)
    if not methods:
        raise DataError(f"no methods recorded in {args.explained}/run.meta")

    rows, base = read_manifest(_require_file(args.manifest, "manifest"))
    scored_rows = []
    skipped = 0
    for row in rows:
        if row.label != 1:
            continue
        if not row.mask_path or not os.path.isfile(os.path.join(base, row.mask_path)):
            skipped += 1
            continue
        scored_rows.append((row, read_pbm(os.path.join(base, row.mask_path))))
    if not scored_rows:
        raise DataError(f"no annotated positive samples in {args.manifest}")
    if skipped:
        print(f"warning: skipped {skipped} positive samples without annotations", file=sys.stderr)

    def focus_path(row, method, stem=None):
        name = f"{method}_focus.pbm" if stem is None else f"{method}_guided_{stem}.pbm"
        return _require_file(os.path.join(args.explained, row.sample_id, name), "focus mask")

    tagged = []
    for method in methods:
        entries = [
            (row.sample_id, read_pbm(focus_path(row, method)), annotation)
            for row, annotation in scored_rows
        ]
        tagged.append((method, "baseline", explanation_quality(entries, args.bootstrap, args.seed)))
        for stem in stems:
            entries = [
                (row.sample_id, read_pbm(focus_path(row, method, stem)), annotation)
                for row, annotation in scored_rows
            ]
            tagged.append((method, stem, explanation_quality(entries, args.bootstrap, args.seed)))

    os.makedirs(args.out, exist_ok=True)
    write_sample_report(os.path.join(args.out, "samples.csv"), tagged)
    write_aggregate_report(os.path.join(args.out, "aggregate.csv"), tagged)
    write_run_meta(
        os.path.join(args.out, "run.meta"),
        "evaluate-explanations",
        {
            "explained": args.explained,
            "manifest": args.manifest,
            "out": args.out,
            "bootstrap": args.bootstrap,
            "seed": args.seed,
            "methods": methods,
            "template_stems": stems,
            "n_scored": len(scored_rows),
            "n_skipped": skipped,
        },
    )
    print(f"evaluated {len(scored_rows)} samples, {len(tagged) * 2} aggregate rows")
    return 0


# ---------------------------------------------------------------------------
# render

def _load_gray8(path) -> np.ndarray:
    pixels = read_pgm(path)
    if pixels.dtype == np.uint16:
        return np.round(pixels.astype(float) / 65535.0 * 255.0).astype(np.uint8)
    return pixels


def cmd_render(args) -> int:
    gray = _load_gray8(_require_file(args.image, "image"))
    overlay = np.repeat(gray.astype(np.int32)[:, :, None], 3, axis=2)
    channels = {"ground_truth": 1, "baseline": 0, "guided": 2}
    used = {}
    for kind, channel in channels.items():
        path = getattr(args, kind)
        if path is None:
            continue
        mask = read_pbm(_require_file(path, f"{kind} mask"))
        if mask.shape != gray.shape:
            raise DataError(
                f"{kind} mask {path} is {mask.shape[1]}x{mask.shape[0]}, image is "
                f"{gray.shape[1]}x{gray.shape[0]}"
            )
        overlay[:, :, channel] += OVERLAY_BOOST * mask
        used[kind] = path
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    write_ppm(args.out, np.clip(overlay, 0, 255).astype(np.uint8))
    write_run_meta(
        args.out + ".meta",
        "render",
        {
            "image": args.image,
            "out": args.out,
            "overlay_boost": OVERLAY_BOOST,
            **used,
        },
    )
    print(f"wrote overlay {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring

def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="tgxai", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tgxai {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    registry = {}

    def register(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key=value file supplying defaults; flags win")
        registry[name] = p
        return p

    p = register("generate-synthetic", cmd_generate_synthetic, "write a phantom corpus with masks and split manifests")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--positive-rate", type=float, default=0.25)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--off-template-rate", type=float, default=0.05)
    p.add_argument("--split", type=_parse_ratio_list, default=(0.6, 0.2, 0.2),
                   help="train,val,test ratios (default 0.6,0.2,0.2)")
    p.add_argument("--split-seed", type=int, default=0)

    p = register("train", cmd_train, "train the classifier with early stopping")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--val-manifest", required=True)
    p.add_argument("--out", required=True, help="directory for model.xgd1, history.csv, reference.xim")
    p.add_argument("--filters", type=_parse_int_list, default=(8, 16),
                   help="conv filters per block, e.g. 8,16")
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--pos-weight", default="auto",
                   help="positive-class loss weight, or 'auto' for N_neg/N_pos")
    p.add_argument("--weighted-validation", action="store_true",
                   help="apply the positive-class weight to the validation loss too")
    p.add_argument("--seed", type=int, default=0)

    p = register("make-template", cmd_make_template, "build an occurrence template from one annotation")
    p.add_argument("--annotation", required=True, help="PBM lesion annotation")
    p.add_argument("--out", required=True, help="output template PBM")
    p.add_argument("--radius", type=int, default=7, help="dilation disc radius (7 = 15x15 kernel)")
    p.add_argument("--no-flip", action="store_true", help="skip the horizontal mirror step")

    p = register("explain", cmd_explain, "write importance maps and focus regions per sample")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--methods", type=_parse_methods, default=METHODS,
                   help="comma-separated subset of saliency,gradcam,ig")
    p.add_argument("--vstar", type=float, default=0.95, help="focus cutoff on the normalized map")
    p.add_argument("--ig-steps", type=int, default=64)
    p.add_argument("--reference", help="reference .xim for integrated gradients")
    p.add_argument("--template", action="append", help="template PBM; may repeat")
    p.add_argument("--guide-mode", choices=GUIDE_MODES, default="intersect")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--all-samples", action="store_true",
                   help="explain every manifest row, not just annotated positives")

    p = register("evaluate-classifier", cmd_evaluate_classifier, "classification metrics with bootstrap SEs")
    p.add_argument("--model", required=True)
    p.add_argument("--val-manifest", required=True, help="used to pick the ROC-corner cutoff")
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap resample count")
    p.add_argument("--seed", type=int, default=0)

    p = register("evaluate-explanations", cmd_evaluate_explanations, "IoU/DSC of focus regions vs annotations")
    p.add_argument("--explained", required=True, help="output directory of an explain run")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = register("render", cmd_render, "compose image and masks into a color overlay PPM")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ground-truth", help="annotation PBM (green)")
    p.add_argument("--baseline", help="baseline focus PBM (red)")
    p.add_argument("--guided", help="guided focus PBM (blue)")

    return parser, registry


def _validate_domains(args) -> None:
    checks = [
        ("vstar", lambda v: 0 < v <= 1, "--vstar must be in (0, 1]"),
        ("ig_steps", lambda v: v >= 1, "--ig-steps must be >= 1"),
        ("workers", lambda v: v >= 1, "--workers must be >= 1"),
        ("bootstrap", lambda v: v >= 1, "--bootstrap must be >= 1"),
        ("radius", lambda v: v >= 0, "--radius must be >= 0"),
    ]
    for name, ok, message in checks:
        if hasattr(args, name) and not ok(getattr(args, name)):
            print(f"tgxai: error: {message} (got {getattr(args, name)})", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)


def main(argv=None) -> int:
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, registry[args.command])
        _validate_domains(args)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return code
    except (ParseError, DataError) as exc:
        print(f"tgxai: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except NumericError as exc:
        print(f"tgxai: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"tgxai: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
