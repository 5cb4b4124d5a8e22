"""Binary weight checkpoints.

Layout (all integers little-endian)::

    b"RGCK" | u8 version | u32 header_len | header (UTF-8 JSON metadata)
    u32 n_arrays
    per array: u16 name_len | name (UTF-8) | u8 ndim | u32 dims[ndim] | f8 data (C order)
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RGCK"
VERSION = 1


def save_checkpoint(path, arrays: dict, metadata=None) -> None:
    header = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC + struct.pack("<BI", VERSION, len(header)) + header)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            a = np.ascontiguousarray(getattr(arr, "value", arr), dtype="<f8")
            key = name.encode("utf-8")
            fh.write(struct.pack("<H", len(key)) + key)
            fh.write(struct.pack(f"<B{a.ndim}I", a.ndim, *a.shape))
            fh.write(a.tobytes())


def load_checkpoint(path):
    """Return ``(arrays, metadata)``."""
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack_from("<BI", buf, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 9
    meta = json.loads(buf[pos : pos + hlen].decode("utf-8"))
    pos += hlen
    (n,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    arrays = {}
    for _ in range(n):
        (klen,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = buf[pos : pos + klen].decode("utf-8")
        pos += klen
        (ndim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", buf, pos)
        pos += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).reshape(shape).astype(float)
        pos += 8 * size
    return arrays, meta
