"""
Matrix file formats.

Binary ``.nlrm`` layout (all integers little-endian)::

    0..3    magic b"NLRM"
    4       version (1)
    5       scalar kind (0 = real64, 1 = complex128)
    6..7    reserved, zero
    8..15   rows (uint64)
    16..23  cols (uint64)
    24..    rows*cols scalars, column-major; complex stored as (re, im) pairs

CSV is for real matrices only: one row per line, comma separated, written
with 17 significant digits so that a round trip is exact.
"""

import os
import struct

import numpy as np

from .errors import FormatError, InvalidArgumentError

MAGIC = b"NLRM"
VERSION = 1
HEADER = struct.Struct("<4sBBHQQ")
_KINDS = {0: np.dtype("<f8"), 1: np.dtype("<c16")}


def write_matrix(path, A):
    """Write ``A`` as ``.nlrm`` (or CSV when the path ends in ``.csv``)."""
    path = os.fspath(path)
    if path.lower().endswith(".csv"):
        write_csv(path, A)
        return
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise InvalidArgumentError(f"can only write 2-D matrices, got shape {A.shape}")
    kind = 1 if np.iscomplexobj(A) else 0
    payload = np.asarray(A, dtype=_KINDS[kind]).tobytes(order="F")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, kind, 0, A.shape[0], A.shape[1]))
        fh.write(payload)


def read_matrix(path):
    path = os.fspath(path)
    if path.lower().endswith(".csv"):
        return read_csv(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    return decode_matrix(raw)


def decode_matrix(raw):
    if len(raw) < HEADER.size:
        raise FormatError(f"truncated header: {len(raw)} of {HEADER.size} bytes", offset=len(raw))
    magic, version, kind, reserved, rows, cols = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if kind not in _KINDS:
        raise FormatError(f"unknown scalar kind {kind}", offset=5)
    if reserved != 0:
        raise FormatError("reserved bytes must be zero", offset=6)
    dtype = _KINDS[kind]
    need = rows * cols * dtype.itemsize
    have = len(raw) - HEADER.size
    if have < need:
        raise FormatError(f"truncated payload: expected {need} bytes, found {have}",
                          offset=HEADER.size + have)
    if have > need:
        raise FormatError(f"{have - need} trailing bytes after payload", offset=HEADER.size + need)
    data = np.frombuffer(raw, dtype=dtype, count=rows * cols, offset=HEADER.size)
    A = data.reshape((rows, cols), order="F")
    return A.astype(np.complex128 if kind else np.float64)


def write_csv(path, A):
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    if np.iscomplexobj(A):
        raise InvalidArgumentError("CSV export supports real matrices only")
    with open(path, "w", encoding="utf-8") as fh:
        for row in A:
            fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def read_csv(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise FormatError(f"non-numeric CSV entry: {exc}", offset=lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(
                    f"ragged CSV: {len(rows[-1])} fields, expected {len(rows[0])}", offset=lineno)
    if not rows:
        raise FormatError("empty CSV file", offset=1)
    return np.array(rows, dtype=np.float64)
