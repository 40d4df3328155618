"""File formats: binary TNSR tensors, headerless CSV matrices."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"TNSR"
VERSION = 1
MAX_ORDER = 8


def write_tnsr(path, x):
    """Write ``x`` as a TNSR file (little-endian, vectorization order)."""
    x = np.asarray(x, dtype="<f8")
    header = MAGIC + struct.pack("<II", VERSION, x.ndim) + struct.pack(f"<{x.ndim}Q", *x.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(x.reshape(-1, order="F").tobytes())


def read_tnsr(path):
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not a TNSR file")
    version, order = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported TNSR version {version}")
    if not 1 <= order <= MAX_ORDER:
        raise FormatError(f"{path}: unsupported order {order}")
    off = 12 + 8 * order
    if len(data) < off:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{order}Q", data, 12)
    count = int(np.prod(dims))
    if len(data) != off + 8 * count:
        raise FormatError(f"{path}: expected {count} values for dims {dims}")
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=off)
    return flat.reshape(dims, order="F").astype(float)


def write_matrix_csv(path, m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    np.savetxt(path, m, delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed CSV ({exc})") from exc
    if m.size == 0:
        raise FormatError(f"{path}: empty CSV")
    if not np.all(np.isfinite(m)):
        raise FormatError(f"{path}: non-finite entries")
    return m


def write_labels(path, labels):
    Path(path).write_text("".join(f"{int(z)}\n" for z in labels))


def read_labels(path):
    try:
        return np.array([int(line) for line in Path(path).read_text().split()], dtype=int)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed labels ({exc})") from exc


def read_samples(directory):
    """All ``*.tnsr`` files of a directory in lexicographic order."""
    paths = sorted(Path(directory).glob("*.tnsr"))
    if not paths:
        raise FormatError(f"{directory}: no .tnsr files")
    data = [read_tnsr(p) for p in paths]
    dims = {x.shape for x in data}
    if len(dims) != 1:
        raise FormatError(f"{directory}: samples have inconsistent dims {sorted(dims)}")
    return np.stack(data)
