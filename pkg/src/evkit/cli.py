"""Single executable exposing the pipeline as subcommands.

Exit codes: 0 success, 2 usage or bad input, 1 internal error. Seeds and
the resolved configuration are always echoed to stderr; stdout carries
machine-readable results (CSV or JSON per --format).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .dataset import (
    FRAME_INTERVAL_US,
    MOTION_CLASSES,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    load_manifest,
    load_reconstruction_pairs,
)
from .emulator import EmulatorConfig, FrameSequence, emulate_sequence
from .events import SensorGeometry, stream_stats
from .formats import (
    FormatError,
    read_events,
    read_frame_pgm,
    write_events,
    write_ppm,
    write_tensor,
)
from .representations import VARIANTS, tie_tensor, tie_to_rgb
from .toyml import (
    TrainConfig,
    evaluate,
    load_checkpoint,
    pretrain,
    save_checkpoint,
    train,
)
from .toyml.checkpoint import CHECKPOINT_MAGIC
from .toyml.model import ModelDims

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


class InputError(Exception):
    """Bad user input (exit code 2)."""


def _echo_config(args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"evkit {args.command} config: {json.dumps(resolved, default=str)}", file=sys.stderr)


def _read_frames_dir(frames_dir: Path, frame_interval_us: int) -> FrameSequence:
    if not frames_dir.is_dir():
        raise InputError(f"frames directory not found: {frames_dir}")
    paths = sorted(frames_dir.glob("*.pgm"))
    if len(paths) < 2:
        raise InputError(f"insufficient frames: need at least 2 PGM files in {frames_dir}")
    frames = np.stack([read_frame_pgm(p) for p in paths])
    timestamps = np.arange(len(paths), dtype=np.int64) * frame_interval_us
    geometry = SensorGeometry(frames.shape[2], frames.shape[1])
    return FrameSequence(frames, timestamps, geometry)


def cmd_emulate(args: argparse.Namespace) -> int:
    cfg = EmulatorConfig(
        threshold_c=args.threshold,
        sigma_threshold=args.sigma,
        timestamp_resolution=args.timestamp_resolution,
        cutoff_hz=args.cutoff_hz,
        log_eps=args.log_eps,
        seed=args.seed,
    )
    frames = _read_frames_dir(Path(args.frames_dir), args.frame_interval_us)
    stream = emulate_sequence(frames, cfg)
    out = Path(args.out)
    write_events(out, stream)
    sidecar = {
        "tool": f"evkit {__version__}",
        "emulator_config": dataclasses.asdict(cfg),
        "frame_interval_us": args.frame_interval_us,
        "geometry": {"width": frames.geometry.width, "height": frames.geometry.height},
        "event_count": len(stream),
    }
    with open(out.with_suffix(out.suffix + ".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    _emit(args, {"events": str(out), "count": len(stream)})
    return EXIT_OK


def cmd_represent(args: argparse.Namespace) -> int:
    if args.variant not in VARIANTS:
        raise InputError(f"unknown variant {args.variant!r}; choose from {sorted(VARIANTS)}")
    stream = read_events(args.events)
    if len(stream) == 0:
        print("warning: empty event file; writing a zero image", file=sys.stderr)
    tensor = tie_tensor(stream, args.channels, VARIANTS[args.variant], geometry=stream.geometry)
    image = tie_to_rgb(tensor)
    write_ppm(args.out, image.rgb)
    if args.dump_tensor:
        write_tensor(args.dump_tensor, tensor.channels, dtype="float32")
    _emit(args, {"image": str(args.out), "z_lo": image.z_lo, "z_hi": image.z_hi, "degenerate": image.degenerate})
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        classes=tuple(args.classes),
        samples_per_class=args.samples_per_class,
        geometry=SensorGeometry(args.size, args.size),
        frames_per_sample=args.frames,
        frame_interval_us=args.frame_interval_us,
        noise_level=args.noise,
        train_fraction=args.train_fraction,
        seed=args.seed,
    )
    manifest = generate_synthetic(spec, args.out_dir, EmulatorConfig(seed=args.seed))
    _emit(args, {"manifest": str(Path(args.out_dir) / "manifest.json"), "samples": len(manifest.samples)})
    return EXIT_OK


def _write_metrics_csv(path: Path, history) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("epoch,split,loss,accuracy\n")
        for r in history:
            fh.write(f"{r.epoch},{r.split},{r.loss:.9g},{r.accuracy:.9g}\n")


def cmd_pretrain(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    pairs = load_reconstruction_pairs(
        manifest, delta_t=args.delta_t, n=args.n, variant=VARIANTS[args.variant], channels=args.channels
    )
    cfg = TrainConfig(
        learning_rate=args.learning_rate, epochs=args.epochs, seed=args.seed, loss=args.loss
    )
    dims = ModelDims(classes=len(manifest.classes))
    model, history = pretrain(pairs, cfg, dims)
    out = Path(args.out)
    save_checkpoint(out, model)
    _write_metrics_csv(out.with_suffix(".metrics.csv"), history)
    if args.figures:
        from .report import render_training_curves

        render_training_curves(out.with_suffix(".curves.png"), history)
    _emit(args, {"checkpoint": str(out), "pairs": int(pairs[0].shape[0]), "final_loss": history[-1].loss if history else None})
    return EXIT_OK


def _classification_arrays(dataset, use_lstm: bool):
    x = dataset.sequences if use_lstm else dataset.sequences[:, -1]
    return x, dataset.labels


def cmd_train(args: argparse.Namespace) -> int:
    if args.regime in ("frozen", "finetune") and not args.checkpoint:
        raise InputError(f"regime {args.regime!r} requires --checkpoint")
    manifest = load_manifest(args.manifest)
    pretrained = load_checkpoint(args.checkpoint) if args.checkpoint else None
    use_lstm = args.lstm == "on"
    variant = VARIANTS[args.variant]
    train_ds = load_dataset(manifest, args.delta_t, args.n, variant, args.channels, split="train")
    val_ds = load_dataset(manifest, args.delta_t, args.n, variant, args.channels, split="val")
    cfg = TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
        encoder_mode=args.regime,
        use_lstm=use_lstm,
    )
    dims = ModelDims(classes=len(manifest.classes))
    val_arrays = _classification_arrays(val_ds, use_lstm)
    model, history = train(
        _classification_arrays(train_ds, use_lstm),
        cfg,
        pretrained=pretrained,
        dims=dims,
        val_dataset=val_arrays if len(val_arrays[1]) else None,
    )
    out = Path(args.out)
    save_checkpoint(out, model)
    _write_metrics_csv(out.with_suffix(".metrics.csv"), history)
    if args.figures:
        from .report import render_training_curves

        render_training_curves(out.with_suffix(".curves.png"), history)
    val_acc = [r.accuracy for r in history if r.split == "val"]
    _emit(args, {"model": str(out), "final_val_accuracy": val_acc[-1] if val_acc else None})
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    model = load_checkpoint(args.model)
    use_lstm = args.lstm == "on"
    ds = load_dataset(manifest, args.delta_t, args.n, VARIANTS[args.variant], args.channels, split=args.split)
    x, labels = _classification_arrays(ds, use_lstm)
    accuracy, confusion = evaluate(model, (x, labels), use_lstm=use_lstm, num_classes=len(manifest.classes))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "confusion.csv"
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write("true\\pred," + ",".join(manifest.classes) + "\n")
        for i, name in enumerate(manifest.classes):
            fh.write(name + "," + ",".join(f"{v:.6f}" for v in confusion[i]) + "\n")
    table_path = out_dir / "confusion.txt"
    width = max(len(c) for c in manifest.classes) + 2
    with open(table_path, "w", encoding="ascii") as fh:
        fh.write("".rjust(width) + "".join(c.rjust(width) for c in manifest.classes) + "\n")
        for i, name in enumerate(manifest.classes):
            fh.write(name.rjust(width) + "".join(f"{v:.3f}".rjust(width) for v in confusion[i]) + "\n")
        fh.write(f"\naccuracy: {accuracy:.4f}\n")
    if args.figures:
        from .report import render_confusion_matrix

        render_confusion_matrix(
            out_dir / "confusion.png", confusion, manifest.classes, title=f"accuracy {accuracy:.3f}"
        )
    _emit(args, {"accuracy": accuracy, "confusion_csv": str(csv_path)})
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    info: dict
    if head == b"EVST":
        stream = read_events(path)
        stats = stream_stats(stream)
        info = {
            "format": "event-binary",
            "geometry": f"{stream.geometry.width}x{stream.geometry.height}",
            "count": stats.count,
            "duration_us": stats.duration_us,
            "mean_rate_hz": stats.mean_rate_hz,
            "polarity_balance": stats.polarity_balance,
        }
    elif head == CHECKPOINT_MAGIC:
        model = load_checkpoint(path)
        info = {
            "format": "checkpoint",
            "parameters": int(sum(v.size for v in model.params.values())),
            "classes": model.dims.classes,
        }
    elif head == b"EVTN":
        from .formats import read_tensor

        tensor = read_tensor(path)
        info = {"format": "tensor", "shape": list(tensor.shape), "dtype": str(tensor.dtype)}
    elif head[:2] in (b"P5", b"P6"):
        kind = "pgm" if head[:2] == b"P5" else "ppm"
        img = read_frame_pgm(path) if kind == "pgm" else None
        from .formats import read_ppm

        if img is None:
            img = read_ppm(path)
        info = {"format": kind, "shape": list(img.shape)}
    elif head.lstrip()[:1] == b"{":
        manifest = load_manifest(path, check_files=False)
        info = {
            "format": "manifest",
            "samples": len(manifest.samples),
            "classes": list(manifest.classes),
        }
    else:
        raise InputError(f"{path}: unrecognized format (magic {head!r})")
    _emit(args, info)
    return EXIT_OK


def _emit(args: argparse.Namespace, payload: dict) -> None:
    if getattr(args, "format", "json") == "csv":
        keys = list(payload)
        print(",".join(keys))
        print(",".join(str(payload[k]) for k in keys))
    else:
        print(json.dumps(payload))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evkit", description="Event-camera processing toolkit")
    parser.add_argument("--version", action="version", version=f"evkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=42, help="RNG seed (default 42)")
        p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format (default json)")

    p = sub.add_parser("emulate", help="convert PGM frames to an event stream")
    p.add_argument("frames_dir", help="directory of PGM frames (sorted by name)")
    p.add_argument("out", help="output event file (.evst)")
    p.add_argument("--threshold", type=float, default=0.15, help="event threshold C (default 0.15)")
    p.add_argument("--sigma", type=float, default=0.03, help="threshold mismatch sigma (default 0.03)")
    p.add_argument("--timestamp-resolution", type=int, default=1000, help="timestamp resolution in us (default 1000)")
    p.add_argument("--cutoff-hz", type=float, default=30.0, help="low-pass cutoff in Hz, 0 disables (default 30)")
    p.add_argument("--log-eps", type=float, default=1e-3, help="log intensity offset (default 1e-3)")
    p.add_argument("--frame-interval-us", type=int, default=FRAME_INTERVAL_US, help="frame spacing in us (default 33333)")
    common(p)
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("represent", help="compute a TIE image from an event file")
    p.add_argument("events", help="input event file")
    p.add_argument("out", help="output PPM image")
    p.add_argument("--variant", default="tht", help="TIE variant: tt, tth, tht, thh (default tht)")
    p.add_argument("--channels", type=int, default=9, help="temporal channel count C (default 9)")
    p.add_argument("--dump-tensor", default=None, help="also write the raw C-channel tensor here")
    common(p)
    p.set_defaults(func=cmd_represent)

    p = sub.add_parser("synth", help="generate the synthetic motion-pattern dataset")
    p.add_argument("out_dir", help="output dataset directory")
    p.add_argument("--classes", nargs="+", default=list(MOTION_CLASSES), help="motion classes to render")
    p.add_argument("--samples-per-class", type=int, default=40, help="samples per class (default 40)")
    p.add_argument("--size", type=int, default=64, help="square frame side in pixels (default 64)")
    p.add_argument("--frames", type=int, default=10, help="frames per sample (default 10)")
    p.add_argument("--frame-interval-us", type=int, default=FRAME_INTERVAL_US, help="frame spacing in us (default 33333)")
    p.add_argument("--noise", type=float, default=0.0, help="per-pixel Gaussian frame noise (default 0)")
    p.add_argument("--train-fraction", type=float, default=0.8, help="train split fraction (default 0.8)")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="train the reconstruction encoder")
    p.add_argument("manifest", help="dataset manifest")
    p.add_argument("out", help="output checkpoint (.ckpt)")
    p.add_argument("--loss", choices=("reconstruction_l2", "cgan"), default="reconstruction_l2", help="pretraining objective")
    p.add_argument("--epochs", type=int, default=200, help="epochs (default 200)")
    p.add_argument("--learning-rate", type=float, default=0.0001, help="Adam learning rate (default 0.0001)")
    p.add_argument("--variant", default="tht", help="TIE variant (default tht)")
    p.add_argument("--channels", type=int, default=9, help="TIE channels (default 9)")
    p.add_argument("--delta-t", type=int, default=FRAME_INTERVAL_US, help="window width in us (default 33333)")
    p.add_argument("--n", type=int, default=1, help="sub-windows per delta_t (default 1)")
    p.add_argument("--figures", action="store_true", help="also render training-curve figures")
    common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="train the classifier under a regime")
    p.add_argument("manifest", help="dataset manifest")
    p.add_argument("out", help="output model checkpoint")
    p.add_argument("--regime", choices=("scratch", "frozen", "finetune"), default="scratch", help="encoder regime")
    p.add_argument("--lstm", choices=("on", "off"), default="on", help="use the 3-window LSTM head (default on)")
    p.add_argument("--checkpoint", default=None, help="pretrained encoder checkpoint (frozen/finetune)")
    p.add_argument("--epochs", type=int, default=150, help="epochs (default 150)")
    p.add_argument("--learning-rate", type=float, default=0.0001, help="Adam learning rate (default 0.0001)")
    p.add_argument("--variant", default="tht", help="TIE variant (default tht)")
    p.add_argument("--channels", type=int, default=9, help="TIE channels (default 9)")
    p.add_argument("--delta-t", type=int, default=FRAME_INTERVAL_US, help="window width in us (default 33333)")
    p.add_argument("--n", type=int, default=1, help="sub-windows per delta_t (default 1)")
    p.add_argument("--figures", action="store_true", help="also render training-curve figures")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a manifest split")
    p.add_argument("model", help="model checkpoint")
    p.add_argument("manifest", help="dataset manifest")
    p.add_argument("out_dir", help="directory for confusion CSV/table/figure")
    p.add_argument("--split", choices=("train", "val"), default="val", help="split to evaluate (default val)")
    p.add_argument("--lstm", choices=("on", "off"), default="on", help="LSTM head on/off (default on)")
    p.add_argument("--variant", default="tht", help="TIE variant (default tht)")
    p.add_argument("--channels", type=int, default=9, help="TIE channels (default 9)")
    p.add_argument("--delta-t", type=int, default=FRAME_INTERVAL_US, help="window width in us (default 33333)")
    p.add_argument("--n", type=int, default=1, help="sub-windows per delta_t (default 1)")
    p.add_argument("--figures", action="store_true", help="also render a confusion-matrix figure")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("info", help="format-sniffed summary of an artifact file")
    p.add_argument("path", help="file to inspect")
    common(p)
    p.set_defaults(func=cmd_info)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors already; pass through
        return int(exc.code or 0)
    if hasattr(args, "seed"):
        print(f"evkit seed: {args.seed}", file=sys.stderr)
    _echo_config(args)
    try:
        return args.func(args)
    except (InputError, FormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
