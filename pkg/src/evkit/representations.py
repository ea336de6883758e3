"""Event frames, time surfaces, EST voxel grids, and the TIE variants.

Temporal normalizations:
  tau(t)     = t / t_hi                  (scale-relative)
  tau_hat(t) = (t - t_lo) / (t_hi - t_lo)  (min-max, affine-invariant)

The aggregation kernel is a triangular (tent) kernel on the normalized
time axis whose support equals one inter-bin spacing, so interior events
distribute unit mass across their two neighbouring bins; the spatial part
is a Kronecker delta on the event's pixel. Tensors are float64 in memory
(so oracle comparisons are exact to accumulation order) and are narrowed
to float32 only at serialization time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .events import EventStream, SensorGeometry, TimeWindow

__all__ = [
    "EstGrid",
    "TieVariant",
    "TieTensor",
    "TieImage",
    "VARIANTS",
    "event_frame",
    "time_surface",
    "est_tensor",
    "tie_tensor",
    "tie_to_rgb",
    "percentiles",
]


@dataclass(frozen=True)
class TieVariant:
    """One of the four measurement x kernel-time combinations."""

    measurement: str  # "tau" | "tau_hat"
    kernel_time: str  # "tau" | "tau_hat"

    def __post_init__(self) -> None:
        if self.measurement not in ("tau", "tau_hat"):
            raise ValueError(f"unknown measurement {self.measurement!r}")
        if self.kernel_time not in ("tau", "tau_hat"):
            raise ValueError(f"unknown kernel_time {self.kernel_time!r}")

    @property
    def code(self) -> str:
        a = "t" if self.measurement == "tau" else "th"
        b = "t" if self.kernel_time == "tau" else "th"
        return a + b


# CLI codes: first letter pair = measurement, second = kernel time
# (t = scale-relative, h = min-max normalized).
VARIANTS = {
    "tt": TieVariant("tau", "tau"),
    "tth": TieVariant("tau", "tau_hat"),
    "tht": TieVariant("tau_hat", "tau"),
    "thh": TieVariant("tau_hat", "tau_hat"),
}


@dataclass(frozen=True)
class EstGrid:
    """Per-polarity voxel grid: values[polarity][bin][y][x], polarity 0=+, 1=-."""

    values: np.ndarray  # float64 [2, B, H, W]
    bins: int
    t_lo: int
    t_hi: int
    geometry: SensorGeometry


@dataclass(frozen=True)
class TieTensor:
    """Signed-sum EST channels [C, H, W] for one window."""

    channels: np.ndarray  # float64 [C, H, W]
    variant: TieVariant
    t_lo: int
    t_hi: int


@dataclass(frozen=True)
class TieImage:
    """3-channel byte image after grouping + percentile normalization."""

    rgb: np.ndarray  # uint8 [3, H, W]
    z_lo: float
    z_hi: float
    degenerate: bool = False


def _window_events(window: TimeWindow | EventStream) -> EventStream:
    return window.events if isinstance(window, TimeWindow) else window


def event_frame(window: TimeWindow | EventStream, geometry: Optional[SensorGeometry] = None) -> np.ndarray:
    """2-channel count histogram [polarity][y][x]; channel 0=+, 1=-."""
    ev = _window_events(window)
    g = geometry or ev.geometry
    size = g.height * g.width
    flat = ev.y.astype(np.int64) * g.width + ev.x
    pos = np.bincount(flat[ev.p == 1], minlength=size)
    neg = np.bincount(flat[ev.p == -1], minlength=size)
    return np.stack([pos, neg]).reshape(2, g.height, g.width)


def _norm_bounds(ev: EventStream, t_lo: Optional[int], t_hi: Optional[int]) -> Tuple[int, int]:
    """Default the normalization window to the events' own time extremes."""
    if t_lo is None:
        t_lo = ev.t_first if len(ev) else 0
    if t_hi is None:
        t_hi = ev.t_last if len(ev) else 0
    return int(t_lo), int(t_hi)


def _normalize_times(t: np.ndarray, kind: str, t_lo: int, t_hi: int) -> np.ndarray:
    """Apply tau or tau_hat with the degenerate-window guards.

    Single-instant windows: tau_hat := 0; tau := t/t_hi with t_hi > 0,
    else 0 (avoids 0/0 without branching downstream).
    """
    t = t.astype(np.float64)
    if kind == "tau":
        if t_hi == 0:
            return np.zeros_like(t)
        return t / float(t_hi)
    if t_hi == t_lo:
        return np.zeros_like(t)
    return (t - float(t_lo)) / float(t_hi - t_lo)


def time_surface(window: TimeWindow | EventStream, geometry: Optional[SensorGeometry] = None) -> np.ndarray:
    """Per-pixel min-max-normalized timestamp of the latest event, per polarity.

    Returns float64 [2, H, W]; 0 where a pixel saw no event.
    """
    ev = _window_events(window)
    g = geometry or ev.geometry
    out = np.zeros((2, g.height, g.width))
    if len(ev) == 0:
        return out
    t_lo, t_hi = _norm_bounds(ev, None, None)
    tau_hat = _normalize_times(ev.t, "tau_hat", t_lo, t_hi)
    # events are time-ordered, so later writes win
    for chan, pol in ((0, 1), (1, -1)):
        mask = ev.p == pol
        out[chan, ev.y[mask], ev.x[mask]] = tau_hat[mask]
    return out


def _measurement_values(ev: EventStream, measurement: str, t_lo: int, t_hi: int) -> np.ndarray:
    if measurement == "count":
        return np.ones(len(ev))
    if measurement == "polarity":
        return ev.p.astype(np.float64)
    if measurement in ("tau", "tau_hat"):
        return _normalize_times(ev.t, measurement, t_lo, t_hi)
    raise ValueError(f"unknown measurement {measurement!r}")


def _bin_weights(t_star: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Tent-kernel weights [n_events, B]; support = one inter-bin spacing."""
    B = len(centers)
    if B == 1:
        return np.ones((len(t_star), 1))
    spacing = (centers[-1] - centers[0]) / (B - 1)
    if spacing == 0.0:
        w = np.zeros((len(t_star), B))
        w[:, 0] = 1.0  # all bins coincide; put mass in the first
        return w
    d = np.abs(t_star[:, None] - centers[None, :]) / spacing
    return np.maximum(0.0, 1.0 - d)


def est_tensor(
    window: TimeWindow | EventStream,
    bins: int,
    measurement: str = "count",
    kernel_time: str = "tau_hat",
    t_lo: Optional[int] = None,
    t_hi: Optional[int] = None,
    geometry: Optional[SensorGeometry] = None,
) -> EstGrid:
    """Accumulate per-polarity measurements onto a voxel grid.

    Bin centers are equally spaced over the normalized [t_lo, t_hi]
    range; each event contributes measurement * tent_weight to the bins
    adjacent to its normalized time, at its own pixel.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    ev = _window_events(window)
    g = geometry or ev.geometry
    out = np.zeros((2, bins, g.height, g.width))
    if len(ev) == 0:
        return EstGrid(out, bins, 0, 0, g)
    t_lo, t_hi = _norm_bounds(ev, t_lo, t_hi)
    t_star = _normalize_times(ev.t, kernel_time, t_lo, t_hi)
    c_lo = _normalize_times(np.array([t_lo]), kernel_time, t_lo, t_hi)[0]
    c_hi = _normalize_times(np.array([t_hi]), kernel_time, t_lo, t_hi)[0]
    centers = np.linspace(c_lo, c_hi, bins)
    f = _measurement_values(ev, measurement, t_lo, t_hi)
    weights = _bin_weights(t_star, centers) * f[:, None]  # [N, B]

    flat_pix = ev.y.astype(np.int64) * g.width + ev.x
    size = g.height * g.width
    for chan, pol in ((0, 1), (1, -1)):
        mask = ev.p == pol
        if not mask.any():
            continue
        idx = flat_pix[mask]
        wm = weights[mask]
        for b in range(bins):
            out[chan, b] += np.bincount(idx, weights=wm[:, b], minlength=size).reshape(
                g.height, g.width
            )
    return EstGrid(out, bins, t_lo, t_hi, g)


def tie_tensor(
    window: TimeWindow | EventStream,
    channels: int = 9,
    variant: TieVariant = VARIANTS["tht"],
    t_lo: Optional[int] = None,
    t_hi: Optional[int] = None,
    geometry: Optional[SensorGeometry] = None,
) -> TieTensor:
    """C-channel signed-sum tensor (positive minus negative polarity EST)."""
    if channels % 3 != 0:
        raise ValueError("channel count must be divisible by 3")
    grid = est_tensor(
        window,
        channels,
        measurement=variant.measurement,
        kernel_time=variant.kernel_time,
        t_lo=t_lo,
        t_hi=t_hi,
        geometry=geometry,
    )
    signed = grid.values[0] - grid.values[1]
    return TieTensor(signed, variant, grid.t_lo, grid.t_hi)


def percentiles(values: np.ndarray, p_lo: float = 0.01, p_hi: float = 0.99) -> Tuple[float, float]:
    """Linear-interpolation percentiles (rank r = p * (n - 1))."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("percentiles of an empty collection")
    if not np.all(np.isfinite(values)):
        raise ValueError("percentiles require finite values")
    lo, hi = np.percentile(values, [p_lo * 100.0, p_hi * 100.0], method="linear")
    return float(lo), float(hi)


def tie_to_rgb(tensor: TieTensor) -> TieImage:
    """Group C channels into 3, percentile-normalize, and quantize to bytes.

    Consecutive blocks of C/3 temporal channels sum into one output
    channel (early / middle / late activity); values outside the 1%/99%
    percentiles saturate; byte rounding is half-to-even.
    """
    ch = np.asarray(tensor.channels, dtype=np.float64)
    C = ch.shape[0]
    if C % 3 != 0:
        raise ValueError("channel count must be divisible by 3")
    group = C // 3
    z = ch.reshape(3, group, *ch.shape[1:]).sum(axis=1)
    z_lo, z_hi = percentiles(z, 0.01, 0.99)
    if z_hi == z_lo:
        return TieImage(np.zeros((3, *z.shape[1:]), dtype=np.uint8), z_lo, z_hi, degenerate=True)
    zp = np.clip((z - z_lo) / (z_hi - z_lo), 0.0, 1.0)
    rgb = np.round(zp * 255.0).astype(np.uint8)  # numpy rounds half to even
    return TieImage(rgb, z_lo, z_hi, degenerate=False)
