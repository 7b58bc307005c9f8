"""Checkpoint files: a flat little-endian float64 container plus a JSON
manifest of (name, shape, offset).

Layout: 8-byte magic, uint64-LE manifest length, UTF-8 JSON manifest, then
the raw parameter values back to back.  Offsets in the manifest count
float64 elements from the start of the data block.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"PLCKPT01"


def save_checkpoint(path, state: dict, extra: dict | None = None):
    """Write named arrays (and an optional JSON-serializable `extra` blob)."""
    manifest = {"params": [], "extra": extra or {}}
    blobs = []
    offset = 0
    for name, arr in state.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        manifest["params"].append(
            {"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.size
    header = json.dumps(manifest).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    """Return (state: name -> ndarray, extra: dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(hlen).decode())
        data = np.frombuffer(fh.read(), dtype="<f8")
    state = {}
    for entry in manifest["params"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        lo = entry["offset"]
        state[entry["name"]] = data[lo:lo + n].reshape(shape).astype(np.float64)
    return state, manifest.get("extra", {})
