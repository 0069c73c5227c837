"""Checkpoint file format.

Flat layout, little-endian:

    magic  b"PLCK"
    u32    version (currently 1)
    u32    header length in bytes
    bytes  JSON header: {"params": [{"name", "shape"}...], "counters": {...}}
    f32[]  parameter values, concatenated in header order

Values are stored as 32-bit floats; counters are integers or floats kept
in the JSON header. A loaded checkpoint saves back to identical bytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PLCK"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path, params: dict[str, np.ndarray], counters: dict | None = None) -> None:
    names = sorted(params)
    header = {
        "params": [{"name": n, "shape": list(np.asarray(params[n]).shape)} for n in names],
        "counters": counters or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(hbytes)))
        f.write(hbytes)
        for n in names:
            f.write(np.ascontiguousarray(params[n], dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Returns (params as float64 arrays, counters). Float64 holds every
    float32 exactly, so save(load(p)) reproduces the file bit for bit."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[12:12 + hlen].decode("utf-8"))
    params: dict[str, np.ndarray] = {}
    off = 12 + hlen
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        vals = np.frombuffer(raw, dtype="<f4", count=count, offset=off)
        off += 4 * count
        params[entry["name"]] = vals.astype(np.float64).reshape(shape)
    if off != len(raw):
        raise CheckpointError(f"{path}: truncated or trailing data")
    return params, header["counters"]
