"""Frame-to-event emulation via the log-brightness threshold model.

A pixel fires when the (optionally low-pass filtered) log intensity moves
by a full per-pixel threshold since the pixel's last event. Crossing
instants are linearly interpolated between frames and quantized down to
the configured timestamp resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np

from .events import EventStream, SensorGeometry, TimeWindow, window_by_time

__all__ = [
    "EmulatorConfig",
    "PixelState",
    "FrameSequence",
    "log_luma",
    "lowpass_alpha",
    "lowpass_step",
    "emulate_pixel",
    "emulate_sequence",
    "paired_samples",
    "draw_thresholds",
]

MIN_THRESHOLD = 0.01


@dataclass(frozen=True)
class EmulatorConfig:
    """Emulation parameters; defaults mirror a DAVIS346-style setup."""

    threshold_c: float = 0.15
    sigma_threshold: float = 0.03
    timestamp_resolution: int = 1000  # us
    cutoff_hz: float = 30.0  # 0 disables the low-pass
    log_eps: float = 1e-3
    exposure_duration_us: int = 5000  # recorded for manifest fidelity; unused
    seed: int = 42

    def __post_init__(self) -> None:
        if self.threshold_c <= 0:
            raise ValueError("threshold_c must be > 0")
        if self.sigma_threshold < 0:
            raise ValueError("sigma_threshold must be >= 0")
        if self.timestamp_resolution < 1:
            raise ValueError("timestamp_resolution must be >= 1 us")


@dataclass
class PixelState:
    """Mutable per-pixel emulation state (scalar path)."""

    l_ref: float
    l_lp: float
    c_pos: float
    c_neg: float

    def __post_init__(self) -> None:
        if self.c_pos <= 0 or self.c_neg <= 0:
            raise ValueError("per-pixel thresholds must be positive")


@dataclass(frozen=True)
class FrameSequence:
    """Ordered grayscale frames (uint8-valued) with per-frame timestamps."""

    frames: np.ndarray  # [n_frames, H, W], values 0..255
    timestamps: np.ndarray  # int64 us, strictly increasing
    geometry: SensorGeometry

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "timestamps", ts)
        if frames.ndim != 3:
            raise ValueError("frames must be [n, H, W]")
        if frames.shape[0] != len(ts):
            raise ValueError("one timestamp per frame required")
        if len(ts) > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("frame timestamps must be strictly increasing")
        if frames.shape[1] != self.geometry.height or frames.shape[2] != self.geometry.width:
            raise ValueError("frames do not match geometry")

    def __len__(self) -> int:
        return self.frames.shape[0]


def log_luma(frame: np.ndarray, log_eps: float = 1e-3) -> np.ndarray:
    """Per-pixel log(I/255 + eps); eps keeps I=0 finite."""
    return np.log(np.asarray(frame, dtype=np.float64) / 255.0 + log_eps)


def lowpass_alpha(cutoff_hz: float, dt_us: int) -> float:
    """First-order IIR coefficient for one step of duration dt."""
    if cutoff_hz <= 0:
        return 1.0
    return 1.0 - np.exp(-2.0 * np.pi * cutoff_hz * (dt_us / 1e6))


def lowpass_step(state: PixelState, l_in: float, dt_us: int, cutoff_hz: float) -> PixelState:
    """Advance the pixel's low-pass state by one frame interval."""
    if dt_us <= 0:
        raise ValueError("dt must be > 0")
    alpha = lowpass_alpha(cutoff_hz, dt_us)
    return replace(state, l_lp=state.l_lp + alpha * (l_in - state.l_lp))


def _pixel_crossings(
    l_ref: float,
    l_prev: float,
    l_cur: float,
    t_prev: int,
    t_cur: int,
    c_pos: float,
    c_neg: float,
    resolution: int,
) -> Tuple[List[Tuple[int, int]], float]:
    """Threshold crossings of the linearly interpolated log signal.

    Returns ([(t_us, polarity), ...] time-ordered, new l_ref). The first
    crossing level always lies beyond l_prev because the residual
    |l_prev - l_ref| is below one threshold by construction.
    """
    events: List[Tuple[int, int]] = []
    d = l_cur - l_ref
    if d >= c_pos:
        n = int(np.floor(d / c_pos))
        for k in range(1, n + 1):
            level = l_ref + k * c_pos
            frac = (level - l_prev) / (l_cur - l_prev)
            t = t_prev + frac * (t_cur - t_prev)
            t_q = int(t // resolution) * resolution
            events.append((t_q, 1))
        l_ref = l_ref + n * c_pos
    elif d <= -c_neg:
        n = int(np.floor(-d / c_neg))
        for k in range(1, n + 1):
            level = l_ref - k * c_neg
            frac = (level - l_prev) / (l_cur - l_prev)
            t = t_prev + frac * (t_cur - t_prev)
            t_q = int(t // resolution) * resolution
            events.append((t_q, -1))
        l_ref = l_ref - n * c_neg
    return events, l_ref


def emulate_pixel(
    state: PixelState,
    l_prev: float,
    l_cur: float,
    t_prev: int,
    t_cur: int,
    cfg: EmulatorConfig,
) -> Tuple[List[Tuple[int, int]], PixelState]:
    """Events for one pixel over one frame interval (t_prev, t_cur].

    l_prev/l_cur are already low-pass filtered log intensities; the
    returned state carries the advanced reference level.
    """
    if t_prev >= t_cur:
        raise ValueError("t_prev must be < t_cur")
    events, l_ref = _pixel_crossings(
        state.l_ref, l_prev, l_cur, t_prev, t_cur, state.c_pos, state.c_neg, cfg.timestamp_resolution
    )
    return events, replace(state, l_ref=l_ref, l_lp=l_cur)


def draw_thresholds(cfg: EmulatorConfig, geometry: SensorGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pixel (c_pos, c_neg) maps, drawn once from the seeded generator.

    Normal(threshold_c, sigma^2), clamped at MIN_THRESHOLD. A single
    counter-based draw keeps the maps independent of any parallel
    schedule downstream.
    """
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    shape = (2, geometry.height, geometry.width)
    if cfg.sigma_threshold == 0.0:
        c = np.full(shape, cfg.threshold_c, dtype=np.float64)
    else:
        c = rng.normal(cfg.threshold_c, cfg.sigma_threshold, size=shape)
    c = np.maximum(c, MIN_THRESHOLD)
    return c[0], c[1]


def emulate_sequence(frames: FrameSequence, cfg: EmulatorConfig) -> EventStream:
    """Emulate the whole frame sequence into one canonically sorted stream.

    Vectorized over pixels; output is sorted by (t, y, x, p) and is
    bit-identical for a fixed (frames, cfg) regardless of scheduling.
    """
    if len(frames) < 2:
        raise ValueError("insufficient frames: need at least 2")
    g = frames.geometry
    c_pos, c_neg = draw_thresholds(cfg, g)
    resolution = cfg.timestamp_resolution

    l_lp = log_luma(frames.frames[0], cfg.log_eps)
    l_ref = l_lp.copy()

    ts_chunks: List[np.ndarray] = []
    xs_chunks: List[np.ndarray] = []
    ys_chunks: List[np.ndarray] = []
    ps_chunks: List[np.ndarray] = []

    yy, xx = np.mgrid[0 : g.height, 0 : g.width]
    for i in range(1, len(frames)):
        t_prev = int(frames.timestamps[i - 1])
        t_cur = int(frames.timestamps[i])
        l_in = log_luma(frames.frames[i], cfg.log_eps)
        alpha = lowpass_alpha(cfg.cutoff_hz, t_cur - t_prev)
        l_prev = l_lp
        l_cur = l_lp + alpha * (l_in - l_lp)

        d = l_cur - l_ref
        n_pos = np.where(d >= c_pos, np.floor(d / c_pos), 0).astype(np.int64)
        n_neg = np.where(-d >= c_neg, np.floor(-d / c_neg), 0).astype(np.int64)
        n_max = int(max(n_pos.max(initial=0), n_neg.max(initial=0)))
        denom = l_cur - l_prev
        for k in range(1, n_max + 1):
            for sign, counts, c_map in ((1, n_pos, c_pos), (-1, n_neg, c_neg)):
                mask = counts >= k
                if not mask.any():
                    continue
                level = l_ref[mask] + sign * k * c_map[mask]
                frac = (level - l_prev[mask]) / denom[mask]
                t = t_prev + frac * (t_cur - t_prev)
                t_q = (t // resolution).astype(np.int64) * resolution
                ts_chunks.append(t_q)
                xs_chunks.append(xx[mask])
                ys_chunks.append(yy[mask])
                ps_chunks.append(np.full(int(mask.sum()), sign, dtype=np.int8))
        l_ref = l_ref + n_pos * c_pos - n_neg * c_neg
        l_lp = l_cur

    if not ts_chunks:
        return EventStream(g)
    t = np.concatenate(ts_chunks)
    x = np.concatenate(xs_chunks)
    y = np.concatenate(ys_chunks)
    p = np.concatenate(ps_chunks)
    order = np.lexsort((p, x, y, t))
    return EventStream(g, t[order], x[order], y[order], p[order])


def paired_samples(
    frames: FrameSequence, cfg: EmulatorConfig, delta_t: int, n: int = 1
) -> List[Tuple[TimeWindow, np.ndarray]]:
    """Window the emulated stream and pair each window with the nearest
    frame at or after the window's end boundary."""
    stream = emulate_sequence(frames, cfg)
    windows = window_by_time(stream, delta_t, n)
    pairs: List[Tuple[TimeWindow, np.ndarray]] = []
    ts = frames.timestamps
    for w in windows:
        idx = int(np.searchsorted(ts, w.t_end, side="left"))
        idx = min(idx, len(frames) - 1)
        pairs.append((w, frames.frames[idx]))
    return pairs
