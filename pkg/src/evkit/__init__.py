"""evkit: event-camera emulation, spatio-temporal representations, and a
desk-scale transfer-learning pipeline."""

__version__ = "0.1.0"

from .events import (
    Event,
    EventStream,
    SensorGeometry,
    TimeWindow,
    slice_stream,
    stream_stats,
    validate_stream,
    window_by_time,
)
from .emulator import EmulatorConfig, FrameSequence, emulate_sequence, paired_samples
from .representations import (
    VARIANTS,
    EstGrid,
    TieImage,
    TieTensor,
    TieVariant,
    est_tensor,
    event_frame,
    percentiles,
    tie_tensor,
    tie_to_rgb,
    time_surface,
)

__all__ = [
    "__version__",
    "Event",
    "EventStream",
    "SensorGeometry",
    "TimeWindow",
    "slice_stream",
    "stream_stats",
    "validate_stream",
    "window_by_time",
    "EmulatorConfig",
    "FrameSequence",
    "emulate_sequence",
    "paired_samples",
    "VARIANTS",
    "EstGrid",
    "TieImage",
    "TieTensor",
    "TieVariant",
    "est_tensor",
    "event_frame",
    "percentiles",
    "tie_tensor",
    "tie_to_rgb",
    "time_surface",
]
