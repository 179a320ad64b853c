"""Binary checkpoint format: magic, version, JSON header, float64 payload.

Layout:
    bytes 0-3    magic b"VRIN"
    bytes 4-7    format version, uint32 little-endian
    bytes 8-11   header length in bytes, uint32 little-endian
    header       UTF-8 JSON: {"config": {...}, "manifest": [[name, shape, offset], ...],
                              "payload_len": total doubles}
    payload      contiguous little-endian float64 values

Offsets count doubles from the payload start; the loader checks that
manifest extents are non-overlapping and in-bounds. Round trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"VRIN"
VERSION = 1


class CheckpointError(ValueError):
    """Corrupt, foreign, or version-incompatible checkpoint file."""


def save_checkpoint(path, config_dict: dict, arrays: dict) -> None:
    names = sorted(arrays)
    manifest = []
    offset = 0
    chunks = []
    for name in names:
        arr = np.asarray(arrays[name], dtype=np.float64)
        manifest.append([name, list(arr.shape), offset])
        offset += arr.size
        chunks.append(arr.astype("<f8").tobytes())
    header = json.dumps({"config": config_dict, "manifest": manifest,
                         "payload_len": offset}, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for chunk in chunks:
            f.write(chunk)


def load_checkpoint(path) -> tuple[dict, dict]:
    """Returns (config dict, name -> float64 array)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise CheckpointError(f"'{path}' is not a model checkpoint (bad magic)")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != VERSION:
        raise CheckpointError(
            f"checkpoint version {version} not supported (expected {VERSION})")
    header_len = struct.unpack("<I", raw[8:12])[0]
    if len(raw) < 12 + header_len:
        raise CheckpointError("truncated checkpoint header")
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc

    payload = np.frombuffer(raw[12 + header_len:], dtype="<f8")
    expected = header.get("payload_len")
    if payload.size != expected:
        raise CheckpointError(
            f"payload holds {payload.size} doubles, header expects {expected}")

    spans = []
    arrays = {}
    for name, shape, offset in header["manifest"]:
        size = int(np.prod(shape)) if shape else 1
        if offset < 0 or offset + size > payload.size:
            raise CheckpointError(f"manifest entry '{name}' is out of bounds")
        spans.append((offset, offset + size, name))
        arrays[name] = payload[offset:offset + size].reshape(shape).astype(np.float64)
    spans.sort()
    for (_, end_a, name_a), (start_b, _, name_b) in zip(spans, spans[1:]):
        if start_b < end_a:
            raise CheckpointError(
                f"manifest entries '{name_a}' and '{name_b}' overlap")
    return header["config"], arrays
