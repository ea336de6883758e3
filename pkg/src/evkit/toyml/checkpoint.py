"""Versioned binary model checkpoints.

Layout (little-endian): magic "EVTK", u16 format version, u16 class
count / dims block, u32 entry count, then per parameter: u16 name length,
utf-8 name, u8 ndim, u32 dims, float64 data. Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..formats import FormatError
from .model import ModelDims, ToyModel

__all__ = ["CHECKPOINT_MAGIC", "save_checkpoint", "load_checkpoint"]

CHECKPOINT_MAGIC = b"EVTK"
CHECKPOINT_VERSION = 1

_DIMS_FIELDS = ("input_hw", "in_channels", "hidden", "feature", "lstm_hidden", "classes", "sequence_len")


def save_checkpoint(path: Union[str, Path], model: ToyModel) -> None:
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<H", CHECKPOINT_VERSION))
        fh.write(struct.pack(f"<{len(_DIMS_FIELDS)}I", *(getattr(model.dims, f) for f in _DIMS_FIELDS)))
        fh.write(struct.pack("<I", len(model.params)))
        for name in sorted(model.params):
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path: Union[str, Path]) -> ToyModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        dims_vals = struct.unpack(f"<{len(_DIMS_FIELDS)}I", fh.read(4 * len(_DIMS_FIELDS)))
        dims = ModelDims(**dict(zip(_DIMS_FIELDS, dims_vals)))
        (count,) = struct.unpack("<I", fh.read(4))
        params = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            n = int(np.prod(shape)) if ndim else 1
            body = fh.read(n * 8)
            if len(body) != n * 8:
                raise FormatError(f"{path}: truncated parameter {name!r}")
            params[name] = np.frombuffer(body, dtype="<f8").reshape(shape).copy()
        return ToyModel(dims, params)
