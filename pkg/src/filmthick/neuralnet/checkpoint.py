"""Checkpoint serialization.

Binary layout: magic tag, u32 length-prefixed JSON block holding architecture
and compute dtype, float64 parameter arrays in canonical order, float64
accumulators in the same order, and a trailing u32 epoch counter.  Arrays are
always stored as float64; float32 models upcast losslessly on save and cast
back on load, so round trips are bit-exact in either dtype.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataFormatError
from .config import NetworkConfig, check_same_architecture
from .model import ModelWeights, parameter_names, parameter_shapes

CHECKPOINT_MAGIC = b"THKW1\x00"


def save_checkpoint(path, weights: ModelWeights) -> None:
    meta = {"format": 1,
            "config": weights.config.to_dict(),
            "dtype": str(weights.dtype)}
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    names = parameter_names(weights.config)
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<I", len(meta_bytes)))
        handle.write(meta_bytes)
        for name in names:
            handle.write(np.ascontiguousarray(weights.arrays[name], dtype="<f8").tobytes())
        for name in names:
            handle.write(np.ascontiguousarray(weights.accumulators[name], dtype="<f8").tobytes())
        handle.write(struct.pack("<I", weights.epoch))


def load_checkpoint(path) -> ModelWeights:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if len(raw) < len(CHECKPOINT_MAGIC) + 4:
        raise DataFormatError(f"{path}: truncated checkpoint header")
    if raw[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise DataFormatError(f"{path}: bad magic {raw[:len(CHECKPOINT_MAGIC)]!r}")
    offset = len(CHECKPOINT_MAGIC)
    (meta_length,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    try:
        meta = json.loads(raw[offset:offset + meta_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: invalid checkpoint metadata ({exc})") from exc
    offset += meta_length
    config = NetworkConfig.from_dict(meta["config"])
    dtype = np.dtype(meta["dtype"])
    names = parameter_names(config)
    shapes = parameter_shapes(config)
    total = sum(int(np.prod(shapes[name])) for name in names)
    expected = offset + 2 * total * 8 + 4
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: size mismatch, expected {expected} bytes, got {len(raw)}")

    def read_block():
        nonlocal offset
        block = {}
        for name in names:
            size = int(np.prod(shapes[name]))
            array = np.frombuffer(raw, dtype="<f8", count=size, offset=offset)
            block[name] = array.reshape(shapes[name]).astype(dtype)
            offset += size * 8
        return block

    arrays = read_block()
    accumulators = read_block()
    (epoch,) = struct.unpack_from("<I", raw, offset)
    return ModelWeights(config, arrays, accumulators, epoch=int(epoch))


def require_architecture(weights: ModelWeights, config: NetworkConfig) -> None:
    """Raise unless the checkpoint matches the requested architecture."""
    check_same_architecture(weights.config, config)
