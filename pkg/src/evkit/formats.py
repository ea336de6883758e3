"""Binary and text codecs: event files, PGM/PPM images, tensor container.

All codecs are involutive (read(write(x)) == x bit-exactly) and
little-endian. Distinct failure modes raise FormatError with a specific
message so callers can distinguish bad magic / truncation / count
mismatch.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .events import EventStream, SensorGeometry

__all__ = [
    "FormatError",
    "EVENT_MAGIC",
    "write_events",
    "read_events",
    "write_events_csv",
    "read_events_csv",
    "write_frame_pgm",
    "read_frame_pgm",
    "write_ppm",
    "read_ppm",
    "write_tensor",
    "read_tensor",
]

PathLike = Union[str, Path]

EVENT_MAGIC = b"EVST"
EVENT_VERSION = 1
_HEADER = struct.Struct("<4sHHHQ")  # magic, version, width, height, count
_RECORD_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1")])

TENSOR_MAGIC = b"EVTN"
TENSOR_VERSION = 1


class FormatError(ValueError):
    """Malformed or truncated artifact file."""


def write_events(path: PathLike, stream: EventStream) -> None:
    """Binary event file: EVST header + packed (t u64, x u16, y u16, p i8)."""
    records = np.empty(len(stream), dtype=_RECORD_DTYPE)
    records["t"] = stream.t
    records["x"] = stream.x
    records["y"] = stream.y
    records["p"] = stream.p
    header = _HEADER.pack(
        EVENT_MAGIC, EVENT_VERSION, stream.geometry.width, stream.geometry.height, len(stream)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(records.tobytes())


def read_events(path: PathLike) -> EventStream:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated file (no full header)")
    magic, version, width, height, count = _HEADER.unpack_from(raw)
    if magic != EVENT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != EVENT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size :]
    expected = count * _RECORD_DTYPE.itemsize
    if len(body) < expected:
        raise FormatError(f"{path}: truncated file ({len(body)} of {expected} record bytes)")
    if len(body) > expected:
        raise FormatError(f"{path}: count mismatch (trailing bytes beyond declared {count} records)")
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    return EventStream(
        SensorGeometry(width, height), records["t"].astype(np.int64), records["x"], records["y"], records["p"]
    )


CSV_HEADER = "t_us,x,y,p"


def write_events_csv(path: PathLike, stream: EventStream) -> None:
    """Interop codec: one 't_us,x,y,p' line per event after a header line.

    Geometry travels in a '# geometry WxH' comment so round-trips are exact.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# geometry {stream.geometry.width}x{stream.geometry.height}\n")
        fh.write(CSV_HEADER + "\n")
        for i in range(len(stream)):
            fh.write(f"{stream.t[i]},{stream.x[i]},{stream.y[i]},{stream.p[i]}\n")


def read_events_csv(path: PathLike, geometry: SensorGeometry | None = None) -> EventStream:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            if "geometry" in ln and geometry is None:
                w, h = ln.split()[-1].split("x")
                geometry = SensorGeometry(int(w), int(h))
            continue
        if ln == CSV_HEADER:
            continue
        body.append(ln)
    if geometry is None:
        raise FormatError(f"{path}: no geometry comment and none supplied")
    if not body:
        return EventStream(geometry)
    data = np.array([[int(v) for v in ln.split(",")] for ln in body], dtype=np.int64)
    return EventStream(geometry, data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def _read_pnm_header(fh: io.BufferedReader, expected_magic: bytes, path: PathLike) -> Tuple[int, int]:
    """Parse a binary PNM header (magic, width, height, maxval), skipping
    whitespace and '#' comment lines; maxval must be 255."""
    magic = fh.read(2)
    if magic != expected_magic:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {expected_magic!r}")
    fields = []
    while len(fields) < 3:
        ch = fh.read(1)
        if not ch:
            raise FormatError(f"{path}: truncated header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            continue
        token = ch
        while True:
            ch = fh.read(1)
            if not ch or ch.isspace():
                break
            if ch == b"#":  # comment glued to a token ends it
                while ch not in (b"\n", b""):
                    ch = fh.read(1)
                break
            token += ch
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: unsupported depth (maxval {maxval}, only 255 supported)")
    return width, height


def write_frame_pgm(path: PathLike, frame: np.ndarray) -> None:
    """Binary PGM (P5), maxval 255."""
    frame = np.asarray(frame, dtype=np.uint8)
    if frame.ndim != 2:
        raise ValueError("PGM frame must be 2-D")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frame.shape[1]} {frame.shape[0]}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def read_frame_pgm(path: PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        width, height = _read_pnm_header(fh, b"P5", path)
        body = fh.read(width * height)
        if len(body) != width * height:
            raise FormatError(f"{path}: truncated pixel data")
        return np.frombuffer(body, dtype=np.uint8).reshape(height, width).copy()


def write_ppm(path: PathLike, rgb: np.ndarray) -> None:
    """Binary PPM (P6), maxval 255; accepts [3, H, W] channel-first bytes."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[0] != 3:
        raise ValueError("PPM image must be [3, H, W]")
    interleaved = np.moveaxis(rgb, 0, -1)  # [H, W, 3]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{rgb.shape[2]} {rgb.shape[1]}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(interleaved).tobytes())


def read_ppm(path: PathLike) -> np.ndarray:
    """Returns channel-first [3, H, W] bytes."""
    with open(path, "rb") as fh:
        width, height = _read_pnm_header(fh, b"P6", path)
        body = fh.read(width * height * 3)
        if len(body) != width * height * 3:
            raise FormatError(f"{path}: truncated pixel data")
        interleaved = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3)
        return np.moveaxis(interleaved, -1, 0).copy()


_DTYPE_TAGS = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_TAG_DTYPES = {v: k for k, v in _DTYPE_TAGS.items()}


def write_tensor(path: PathLike, tensor: np.ndarray, dtype: str = "float32") -> None:
    """Raw tensor container: EVTN, version, dtype tag, ndim, dims, data.

    Representations are narrowed to float32 by default on export.
    """
    arr = np.ascontiguousarray(tensor, dtype=np.dtype(dtype).newbyteorder("<"))
    tag = _DTYPE_TAGS[arr.dtype]
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<HBB", TENSOR_VERSION, tag, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path: PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != TENSOR_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        version, tag, ndim = struct.unpack("<HBB", fh.read(4))
        if version != TENSOR_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if tag not in _TAG_DTYPES:
            raise FormatError(f"{path}: unknown dtype tag {tag}")
        shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        dtype = _TAG_DTYPES[tag]
        count = int(np.prod(shape)) if ndim else 1
        body = fh.read(count * dtype.itemsize)
        if len(body) != count * dtype.itemsize:
            raise FormatError(f"{path}: truncated tensor data")
        return np.frombuffer(body, dtype=dtype).reshape(shape).copy()
