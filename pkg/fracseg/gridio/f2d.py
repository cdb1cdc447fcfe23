# fracseg/gridio/f2d.py
"""
F2D: magic "F2D1", rows and cols as little-endian u32, then rows*cols
little-endian float64 values in row-major order.

F2DS (leader stacks): magic "F2DS", u32 scale count, u32 j1, f64 gamma,
then one F2D record per scale.
"""
import logging
import struct
from os import PathLike
from typing import BinaryIO

import numpy as np

from fracseg.exceptions import GridFormatError, NonFiniteError, TruncatedPayloadError
from fracseg.gridio.base import Field2D, as_field
from fracseg.gridio.exceptions import map_io_exception

logger = logging.getLogger(__name__)

F2D_MAGIC = b"F2D1"
F2DS_MAGIC = b"F2DS"
_HEADER = struct.Struct("<4sII")
_STACK_HEADER = struct.Struct("<4sIId")


def _encode_field(field) -> bytes:
    arr = as_field(field)
    rows, cols = arr.shape
    return _HEADER.pack(F2D_MAGIC, rows, cols) + np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _decode_field(fh: BinaryIO, path) -> Field2D:
    header = fh.read(_HEADER.size)
    if len(header) < 4 or header[:4] != F2D_MAGIC:
        raise GridFormatError(f"bad magic in {path}: expected {F2D_MAGIC!r}, got {header[:4]!r}", path=path)
    if len(header) < _HEADER.size:
        raise TruncatedPayloadError(f"truncated F2D header in {path}", path=path)
    _, rows, cols = _HEADER.unpack(header)
    if rows == 0 or cols == 0:
        raise GridFormatError(f"empty grid {rows}x{cols} in {path}", path=path)
    expected = rows * cols * 8
    payload = fh.read(expected)
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: header claims {rows}x{cols} values, payload holds {len(payload) // 8}", path=path)
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{path} contains NaN or Inf values")
    return arr


def write_field(field, path: str | PathLike) -> None:
    """Writes a Field2D in the F2D format; bit-exact round trip with read_field."""
    blob = _encode_field(field)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except Exception as e:
        raise map_io_exception(e, path) from e
    logger.debug(f"wrote F2D {path} ({len(blob)} bytes)")


def read_field(path: str | PathLike) -> Field2D:
    try:
        with open(path, "rb") as fh:
            return _decode_field(fh, path)
    except Exception as e:
        raise map_io_exception(e, path) from e


def write_stack(grids, j1: int, gamma: float, path: str | PathLike) -> None:
    """Writes per-scale grids (ordered j1, j1+1, ...) with the F2DS header."""
    grids = [as_field(g, name=f"scale {j1 + i}") for i, g in enumerate(grids)]
    blob = _STACK_HEADER.pack(F2DS_MAGIC, len(grids), j1, float(gamma))
    blob += b"".join(_encode_field(g) for g in grids)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except Exception as e:
        raise map_io_exception(e, path) from e
    logger.debug(f"wrote F2DS {path}: {len(grids)} scales from j1={j1}")


def read_stack(path: str | PathLike) -> tuple[list[Field2D], int, float]:
    """Returns (grids, j1, gamma)."""
    try:
        with open(path, "rb") as fh:
            header = fh.read(_STACK_HEADER.size)
            if header[:4] != F2DS_MAGIC:
                raise GridFormatError(f"bad magic in {path}: expected {F2DS_MAGIC!r}", path=path)
            if len(header) < _STACK_HEADER.size:
                raise TruncatedPayloadError(f"truncated F2DS header in {path}", path=path)
            _, count, j1, gamma = _STACK_HEADER.unpack(header)
            grids = [_decode_field(fh, path) for _ in range(count)]
    except Exception as e:
        raise map_io_exception(e, path) from e
    return grids, j1, gamma
