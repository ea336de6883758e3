"""Canonical event-stream data model, validation, and time-window sequencing.

Timestamps are integer microseconds throughout; no floating-point time is
used anywhere in this module so window boundaries never drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Event",
    "SensorGeometry",
    "EventStream",
    "TimeWindow",
    "StreamStats",
    "Violation",
    "validate_stream",
    "window_by_time",
    "slice_stream",
    "stream_stats",
]


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel-array dimensions of the (possibly emulated) sensor."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"geometry must be at least 1x1, got {self.width}x{self.height}")


@dataclass(frozen=True)
class Event:
    """A single timestamped, signed-polarity pixel activation.

    t is in microseconds (non-negative), p is exactly -1 or +1.
    """

    t: int
    x: int
    y: int
    p: int


class EventStream:
    """Immutable, time-ordered sequence of events over a fixed geometry.

    Events are stored as parallel numpy arrays (t: int64 microseconds,
    x/y: int32, p: int8). All operations are pure; instances are safe to
    share across threads.
    """

    __slots__ = ("geometry", "t", "x", "y", "p")

    def __init__(
        self,
        geometry: SensorGeometry,
        t: np.ndarray | Sequence[int] = (),
        x: np.ndarray | Sequence[int] = (),
        y: np.ndarray | Sequence[int] = (),
        p: np.ndarray | Sequence[int] = (),
    ) -> None:
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "t", np.ascontiguousarray(t, dtype=np.int64))
        object.__setattr__(self, "x", np.ascontiguousarray(x, dtype=np.int32))
        object.__setattr__(self, "y", np.ascontiguousarray(y, dtype=np.int32))
        object.__setattr__(self, "p", np.ascontiguousarray(p, dtype=np.int8))
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("t/x/y/p arrays must have equal length")
        for arr in (self.t, self.x, self.y, self.p):
            arr.setflags(write=False)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("EventStream is immutable")

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def __iter__(self) -> Iterable[Event]:
        for i in range(len(self)):
            yield Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    @classmethod
    def from_events(cls, geometry: SensorGeometry, events: Iterable[Event]) -> "EventStream":
        evs = list(events)
        return cls(
            geometry,
            [e.t for e in evs],
            [e.x for e in evs],
            [e.y for e in evs],
            [e.p for e in evs],
        )

    @property
    def t_first(self) -> Optional[int]:
        return int(self.t[0]) if len(self) else None

    @property
    def t_last(self) -> Optional[int]:
        return int(self.t[-1]) if len(self) else None


@dataclass(frozen=True)
class TimeWindow:
    """Half-open [t_start, t_end) view into a stream.

    The final window produced by window_by_time is guaranteed to contain
    the stream's last timestamp.
    """

    t_start: int
    t_end: int
    events: EventStream

    def __post_init__(self) -> None:
        if self.t_start >= self.t_end:
            raise ValueError(f"t_start ({self.t_start}) must be < t_end ({self.t_end})")

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class Violation:
    """First invariant violation found in a stream, or None fields if ok."""

    index: int
    reason: str


def validate_stream(stream: EventStream) -> Optional[Violation]:
    """Return None if all stream invariants hold, else the first violation.

    Checks, in event order: coordinate bounds, polarity domain, timestamp
    monotonicity (non-decreasing) and non-negativity.
    """
    g = stream.geometry
    n = len(stream)
    if n == 0:
        return None
    bad_x = (stream.x < 0) | (stream.x >= g.width)
    bad_y = (stream.y < 0) | (stream.y >= g.height)
    bad_p = (stream.p != 1) & (stream.p != -1)
    bad_t = stream.t < 0
    inversion = np.zeros(n, dtype=bool)
    inversion[1:] = stream.t[1:] < stream.t[:-1]
    for i in np.flatnonzero(bad_x | bad_y | bad_p | bad_t | inversion)[:1]:
        i = int(i)
        if bad_x[i]:
            return Violation(i, f"x={int(stream.x[i])} outside [0, {g.width})")
        if bad_y[i]:
            return Violation(i, f"y={int(stream.y[i])} outside [0, {g.height})")
        if bad_p[i]:
            return Violation(i, f"polarity {int(stream.p[i])} not in {{-1, +1}}")
        if bad_t[i]:
            return Violation(i, f"negative timestamp {int(stream.t[i])}")
        return Violation(i, f"timestamp inversion: t[{i}]={int(stream.t[i])} < t[{i - 1}]={int(stream.t[i - 1])}")
    return None


def slice_stream(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Events with t0 <= t < t1, order preserved."""
    if t0 >= t1:
        raise ValueError(f"t0 ({t0}) must be < t1 ({t1})")
    lo = int(np.searchsorted(stream.t, t0, side="left"))
    hi = int(np.searchsorted(stream.t, t1, side="left"))
    return EventStream(
        stream.geometry, stream.t[lo:hi], stream.x[lo:hi], stream.y[lo:hi], stream.p[lo:hi]
    )


def window_by_time(stream: EventStream, delta_t: int, n: int = 1) -> List[TimeWindow]:
    """Partition a stream into consecutive sub-windows of width delta_t / n.

    Each delta_t block starting at the first timestamp is divided into n
    sub-windows in exact integer arithmetic: each gets delta_t // n
    microseconds and the division remainder goes to the block's final
    sub-window. Windows are half-open [start, end); the last block always
    extends past the final timestamp, so every event lands in exactly one
    window. An empty stream yields an empty list.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if delta_t < n:
        raise ValueError(f"delta_t ({delta_t}) must be >= n ({n}) so each sub-window spans >= 1 us")
    if len(stream) == 0:
        return []
    t1 = stream.t_first
    tN = stream.t_last
    span = tN - t1 + 1
    num_blocks = -(-span // delta_t)  # ceil
    width = delta_t // n
    remainder = delta_t - n * width
    windows: List[TimeWindow] = []
    for b in range(num_blocks):
        block_start = t1 + b * delta_t
        for j in range(n):
            start = block_start + j * width
            end = start + width + (remainder if j == n - 1 else 0)
            windows.append(TimeWindow(start, end, slice_stream(stream, start, end)))
    return windows


@dataclass(frozen=True)
class StreamStats:
    count: int
    duration_us: int
    mean_rate_hz: float
    polarity_balance: float  # fraction of positive events; 0.0 for empty


def stream_stats(stream: EventStream) -> StreamStats:
    """Pure summary: count, duration, mean rate, positive-polarity fraction."""
    n = len(stream)
    if n == 0:
        return StreamStats(0, 0, 0.0, 0.0)
    duration = stream.t_last - stream.t_first
    rate = n / (duration / 1e6) if duration > 0 else 0.0
    balance = float(np.count_nonzero(stream.p == 1)) / n
    return StreamStats(n, duration, rate, balance)
