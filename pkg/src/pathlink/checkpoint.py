"""Versioned binary checkpoints.

Layout: 8-byte magic, uint32 version, uint32 manifest length, JSON manifest
(param names/shapes plus an arbitrary config dict), then the raw float64
little-endian buffers in manifest order.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .tensor import Tensor

MAGIC = b"PLNKCKPT"
VERSION = 1


def save_checkpoint(path: str | os.PathLike, params: dict[str, Tensor], config: dict) -> None:
    manifest = {
        "config": config,
        "params": [
            {"name": name, "shape": list(t.data.shape)} for name, t in params.items()
        ],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for t in params.values():
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path: str | os.PathLike) -> tuple[dict[str, np.ndarray], dict]:
    """Returns (name -> array, config). Raises on bad magic or version."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        version, manifest_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        manifest = json.loads(fh.read(manifest_len).decode("utf-8"))
        params: dict[str, np.ndarray] = {}
        for entry in manifest["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated buffer for param {entry['name']!r}")
            params[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return params, manifest["config"]


def restore_params(model_params: dict[str, Tensor], stored: dict[str, np.ndarray]) -> None:
    """Copy stored arrays into a live model's parameters, by name."""
    missing = set(model_params) - set(stored)
    extra = set(stored) - set(model_params)
    if missing or extra:
        raise ValueError(
            f"checkpoint/model parameter mismatch: missing={sorted(missing)} extra={sorted(extra)}"
        )
    for name, t in model_params.items():
        arr = stored[name]
        if arr.shape != t.data.shape:
            raise ValueError(
                f"param {name!r}: checkpoint shape {arr.shape} != model shape {t.data.shape}"
            )
        t.data[...] = arr
