"""Manifests, the synthetic motion-pattern corpus, and pipeline loaders.

The synthetic corpus renders a soft-edged ellipse undergoing one of seven
motion archetypes, emulates events for each sample, and writes a JSON
manifest whose file paths are relative to the manifest's directory.
Generation is a pure function of (spec, seed).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .emulator import EmulatorConfig, FrameSequence, emulate_sequence
from .events import EventStream, SensorGeometry, window_by_time
from .formats import read_events, read_frame_pgm, write_events, write_frame_pgm
from .representations import VARIANTS, TieVariant, tie_tensor, tie_to_rgb

__all__ = [
    "MOTION_CLASSES",
    "SyntheticSpec",
    "ManifestSample",
    "Manifest",
    "generate_synthetic",
    "load_manifest",
    "load_dataset",
    "load_reconstruction_pairs",
    "downsample_area",
    "render_sample_frames",
]

PathLike = Union[str, Path]

MOTION_CLASSES = (
    "expand",
    "contract",
    "translate_up",
    "translate_down",
    "rotate_cw",
    "rotate_ccw",
    "blink",
)

FRAME_INTERVAL_US = 33_333  # 30 fps


@dataclass(frozen=True)
class SyntheticSpec:
    classes: Tuple[str, ...] = MOTION_CLASSES
    samples_per_class: int = 40
    geometry: SensorGeometry = SensorGeometry(64, 64)
    frames_per_sample: int = 10
    frame_interval_us: int = FRAME_INTERVAL_US
    noise_level: float = 0.0
    train_fraction: float = 0.8
    seed: int = 42

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ValueError("need at least 2 classes")
        if self.frames_per_sample < 2:
            raise ValueError("need at least 2 frames per sample")
        unknown = set(self.classes) - set(MOTION_CLASSES)
        if unknown:
            raise ValueError(f"unknown motion classes: {sorted(unknown)}")


@dataclass(frozen=True)
class ManifestSample:
    sample_id: str
    label: int
    label_name: str
    events_path: str
    frame_paths: Tuple[str, ...]
    frame_timestamps_us: Tuple[int, ...]
    split: str  # "train" | "val"


@dataclass(frozen=True)
class Manifest:
    root: Path
    geometry: SensorGeometry
    classes: Tuple[str, ...]
    emulator_config: Dict
    samples: Tuple[ManifestSample, ...]

    def split(self, name: str) -> List[ManifestSample]:
        return [s for s in self.samples if s.split == name]


def _soft_ellipse(
    geometry: SensorGeometry,
    cx: float,
    cy: float,
    a: float,
    b: float,
    angle: float,
    amplitude: float,
    background: float,
    softness: float = 1.5,
) -> np.ndarray:
    """Render one soft-edged ellipse; coordinates and axes in pixels."""
    yy, xx = np.mgrid[0 : geometry.height, 0 : geometry.width].astype(np.float64)
    dx = xx - cx
    dy = yy - cy
    ca, sa = np.cos(angle), np.sin(angle)
    u = (ca * dx + sa * dy) / a
    v = (-sa * dx + ca * dy) / b
    r = np.sqrt(u * u + v * v)
    edge = 1.0 / (1.0 + np.exp((r - 1.0) * max(a, b) / softness))
    img = background + amplitude * edge
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def render_sample_frames(
    class_name: str, spec: SyntheticSpec, rng: np.random.Generator
) -> FrameSequence:
    """Frames for one sample; per-sample position/scale/phase are random."""
    g = spec.geometry
    n = spec.frames_per_sample
    cx = g.width * rng.uniform(0.4, 0.6)
    cy = g.height * rng.uniform(0.4, 0.6)
    base = min(g.width, g.height) * rng.uniform(0.18, 0.26)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    background = rng.uniform(40.0, 70.0)
    amplitude = rng.uniform(140.0, 180.0)
    angle0 = rng.uniform(0.0, np.pi)

    frames = np.empty((n, g.height, g.width), dtype=np.uint8)
    for i in range(n):
        s = i / (n - 1)
        a, b = base, 0.55 * base
        cx_i, cy_i, angle = cx, cy, angle0
        amp = amplitude
        if class_name == "expand":
            a, b = base * (1.0 + 0.7 * s), 0.55 * base * (1.0 + 0.7 * s)
        elif class_name == "contract":
            a, b = base * (1.7 - 0.7 * s), 0.55 * base * (1.7 - 0.7 * s)
        elif class_name == "translate_up":
            cy_i = cy - 0.35 * g.height * s
        elif class_name == "translate_down":
            cy_i = cy + 0.35 * g.height * s
        elif class_name == "rotate_cw":
            angle = angle0 + 0.9 * np.pi * s
        elif class_name == "rotate_ccw":
            angle = angle0 - 0.9 * np.pi * s
        elif class_name == "blink":
            amp = amplitude * (0.5 + 0.5 * np.cos(2.0 * np.pi * 2.0 * s + phase))
        frame = _soft_ellipse(g, cx_i, cy_i, a, b, angle, amp, background)
        if spec.noise_level > 0:
            noise = rng.normal(0.0, spec.noise_level, size=frame.shape)
            frame = np.clip(frame.astype(np.float64) + noise, 0, 255).astype(np.uint8)
        frames[i] = frame
    timestamps = np.arange(n, dtype=np.int64) * spec.frame_interval_us
    return FrameSequence(frames, timestamps, g)


def generate_synthetic(
    spec: SyntheticSpec, out_dir: PathLike, emulator_cfg: Optional[EmulatorConfig] = None
) -> Manifest:
    """Render all samples, emulate their events, and write the dataset tree."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emulator_cfg = emulator_cfg or EmulatorConfig(seed=spec.seed)
    samples: List[ManifestSample] = []
    n_train = int(round(spec.samples_per_class * spec.train_fraction))
    for label, class_name in enumerate(spec.classes):
        for k in range(spec.samples_per_class):
            sample_id = f"{class_name}_{k:03d}"
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, label, k])))
            frames = render_sample_frames(class_name, spec, rng)
            sample_dir = out / sample_id
            sample_dir.mkdir(exist_ok=True)
            frame_paths = []
            for i in range(len(frames)):
                rel = f"{sample_id}/frame_{i:03d}.pgm"
                write_frame_pgm(out / rel, frames.frames[i])
                frame_paths.append(rel)
            stream = emulate_sequence(frames, emulator_cfg)
            events_rel = f"{sample_id}/events.evst"
            write_events(out / events_rel, stream)
            samples.append(
                ManifestSample(
                    sample_id=sample_id,
                    label=label,
                    label_name=class_name,
                    events_path=events_rel,
                    frame_paths=tuple(frame_paths),
                    frame_timestamps_us=tuple(int(t) for t in frames.timestamps),
                    split="train" if k < n_train else "val",
                )
            )
    manifest = Manifest(
        root=out,
        geometry=spec.geometry,
        classes=spec.classes,
        emulator_config=dataclasses.asdict(emulator_cfg),
        samples=tuple(samples),
    )
    save_manifest(manifest, out / "manifest.json")
    return manifest


def save_manifest(manifest: Manifest, path: PathLike) -> None:
    doc = {
        "geometry": {"width": manifest.geometry.width, "height": manifest.geometry.height},
        "classes": list(manifest.classes),
        "emulator_config": manifest.emulator_config,
        "samples": [
            {
                "id": s.sample_id,
                "label": s.label,
                "label_name": s.label_name,
                "events": s.events_path,
                "frames": list(s.frame_paths),
                "frame_timestamps_us": list(s.frame_timestamps_us),
                "split": s.split,
            }
            for s in manifest.samples
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_manifest(path: PathLike, check_files: bool = True) -> Manifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    root = path.parent
    samples = tuple(
        ManifestSample(
            sample_id=s["id"],
            label=int(s["label"]),
            label_name=s["label_name"],
            events_path=s["events"],
            frame_paths=tuple(s["frames"]),
            frame_timestamps_us=tuple(int(t) for t in s["frame_timestamps_us"]),
            split=s["split"],
        )
        for s in doc["samples"]
    )
    if check_files:
        for s in samples:
            for rel in (s.events_path, *s.frame_paths):
                if not (root / rel).exists():
                    raise FileNotFoundError(f"manifest references missing file: {root / rel}")
    return Manifest(
        root=root,
        geometry=SensorGeometry(doc["geometry"]["width"], doc["geometry"]["height"]),
        classes=tuple(doc["classes"]),
        emulator_config=doc["emulator_config"],
        samples=samples,
    )


def downsample_area(image: np.ndarray, out_hw: int) -> np.ndarray:
    """Area-average downsampling; input side must be a multiple of out_hw.

    Works on [H, W] or [C, H, W] float arrays.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[-2:]
    if h % out_hw or w % out_hw:
        raise ValueError(f"cannot area-average {h}x{w} to {out_hw}x{out_hw}")
    fy, fx = h // out_hw, w // out_hw
    shaped = img.reshape(*img.shape[:-2], out_hw, fy, out_hw, fx)
    return shaped.mean(axis=(-3, -1))


def _sample_tie_images(
    stream: EventStream,
    delta_t: int,
    n: int,
    variant: TieVariant,
    channels: int,
    input_hw: int,
) -> Tuple[np.ndarray, bool]:
    """Per-window TIE images for one sample, downsampled and scaled to [0,1].

    Returns ([n_windows, 3, input_hw, input_hw], degenerate_flag); a
    sample with no events yields a single zero image, flagged.
    """
    windows = window_by_time(stream, delta_t, n)
    if not windows:
        return np.zeros((1, 3, input_hw, input_hw)), True
    images = []
    degenerate = False
    for w in windows:
        tensor = tie_tensor(w, channels, variant, geometry=stream.geometry)
        image = tie_to_rgb(tensor)
        degenerate = degenerate or image.degenerate
        images.append(downsample_area(image.rgb, input_hw) / 255.0)
    return np.stack(images), degenerate


@dataclass(frozen=True)
class LoadedDataset:
    """Classification tensors: sequences of 3 consecutive window images."""

    sequences: np.ndarray  # [N, 3, 3 * hw * hw] flattened, in [0, 1]
    labels: np.ndarray  # [N] int
    sample_ids: List[str]
    degenerate_flags: np.ndarray  # [N] bool (zero-padded or event-free)


def load_dataset(
    manifest: Manifest,
    delta_t: int = FRAME_INTERVAL_US,
    n: int = 1,
    variant: TieVariant = VARIANTS["tht"],
    channels: int = 9,
    input_hw: int = 32,
    split: Optional[str] = None,
) -> LoadedDataset:
    """Window every sample, compute TIE images, and group into overlapping
    triplets of 3 consecutive windows. Samples with fewer than 3 windows
    are zero-padded (and flagged)."""
    seqs: List[np.ndarray] = []
    labels: List[int] = []
    ids: List[str] = []
    flags: List[bool] = []
    for s in manifest.samples:
        if split is not None and s.split != split:
            continue
        stream = read_events(manifest.root / s.events_path)
        images, degenerate = _sample_tie_images(stream, delta_t, n, variant, channels, input_hw)
        w = images.shape[0]
        if w < 3:
            padded = np.zeros((3, *images.shape[1:]))
            padded[:w] = images
            triplets = [padded]
            padded_flag = True
        else:
            triplets = [images[i : i + 3] for i in range(w - 2)]
            padded_flag = False
        for trip in triplets:
            seqs.append(trip.reshape(3, -1))
            labels.append(s.label)
            ids.append(s.sample_id)
            flags.append(degenerate or padded_flag)
    return LoadedDataset(
        np.stack(seqs) if seqs else np.zeros((0, 3, 3 * input_hw * input_hw)),
        np.asarray(labels, dtype=np.int64),
        ids,
        np.asarray(flags, dtype=bool),
    )


def load_reconstruction_pairs(
    manifest: Manifest,
    delta_t: int = FRAME_INTERVAL_US,
    n: int = 1,
    variant: TieVariant = VARIANTS["tht"],
    channels: int = 9,
    input_hw: int = 32,
    split: Optional[str] = "train",
) -> Tuple[np.ndarray, np.ndarray]:
    """(TIE image, target frame) training pairs for the reconstruction proxy.

    Each window pairs with the frame at or after its end boundary; targets
    are area-downsampled and scaled to (-1, 1).
    """
    xs: List[np.ndarray] = []
    ys: List[np.ndarray] = []
    for s in manifest.samples:
        if split is not None and s.split != split:
            continue
        stream = read_events(manifest.root / s.events_path)
        windows = window_by_time(stream, delta_t, n)
        if not windows:
            continue
        ts = np.asarray(s.frame_timestamps_us)
        frames = [read_frame_pgm(manifest.root / rel) for rel in s.frame_paths]
        for w in windows:
            tensor = tie_tensor(w, channels, variant, geometry=stream.geometry)
            image = tie_to_rgb(tensor)
            x = downsample_area(image.rgb, input_hw) / 255.0
            idx = min(int(np.searchsorted(ts, w.t_end, side="left")), len(frames) - 1)
            y = downsample_area(frames[idx], input_hw) / 127.5 - 1.0
            xs.append(x.ravel())
            ys.append(y.ravel())
    return np.stack(xs), np.stack(ys)
