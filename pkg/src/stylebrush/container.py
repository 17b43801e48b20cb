"""Reader and writer for the ISTC tensor container format.

Layout, all integers little-endian:

    magic   4 bytes  b"ISTC"
    version u32      1
    count   u32      number of entries
    entry:  u32 name length, UTF-8 name bytes,
            u8 dtype code (0 = float32), u8 rank,
            rank * u32 dims, then the raw little-endian
            row-major float32 values.

Trailing bytes after the last entry are an error, as are duplicate names.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ContainerFormatError

MAGIC = b"ISTC"
VERSION = 1
DTYPE_FLOAT32 = 0


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerFormatError(
                f"truncated container: needed {n} bytes for {what} "
                f"at offset {self.pos}, have {len(self.data) - self.pos}"
            )
        out = self.data[self.pos: self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]


def read_tensor_container(data: bytes) -> dict[str, np.ndarray]:
    """Parse ISTC bytes into a dict of float32 arrays keyed by entry name."""
    cur = _Cursor(data)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = cur.u32("version")
    if version != VERSION:
        raise ContainerFormatError(f"unsupported container version {version}")
    count = cur.u32("entry count")
    tensors: dict[str, np.ndarray] = {}
    for idx in range(count):
        name_len = cur.u32(f"entry {idx} name length")
        try:
            name = cur.take(name_len, f"entry {idx} name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ContainerFormatError(f"entry {idx} name is not UTF-8") from exc
        if name in tensors:
            raise ContainerFormatError(f"duplicate entry name {name!r}")
        dtype_code = cur.u8(f"entry {name!r} dtype")
        if dtype_code != DTYPE_FLOAT32:
            raise ContainerFormatError(
                f"entry {name!r} has unknown dtype code {dtype_code}"
            )
        rank = cur.u8(f"entry {name!r} rank")
        dims = [cur.u32(f"entry {name!r} dim {d}") for d in range(rank)]
        n_values = 1
        for d in dims:
            n_values *= d
        raw = cur.take(4 * n_values, f"entry {name!r} values")
        arr = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        tensors[name] = arr
    if cur.pos != len(data):
        raise ContainerFormatError(
            f"{len(data) - cur.pos} trailing bytes after the last entry"
        )
    return tensors


def write_tensor_container(tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize float32 arrays to ISTC bytes (entries in dict order)."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors.items():
        a = np.asarray(arr, dtype="<f4")
        shape = a.shape  # before ascontiguousarray, which promotes 0-d to 1-d
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<I", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<BB", DTYPE_FLOAT32, len(shape)))
        for d in shape:
            parts.append(struct.pack("<I", d))
        parts.append(np.ascontiguousarray(a).tobytes())
    return b"".join(parts)


def load_tensor_container(path) -> dict[str, np.ndarray]:
    return read_tensor_container(Path(path).read_bytes())


def save_tensor_container(tensors: dict[str, np.ndarray], path) -> None:
    Path(path).write_bytes(write_tensor_container(tensors))
