# fracseg/gridio/pgm.py
import logging
import re
from os import PathLike
from pathlib import Path

import numpy as np

from fracseg.exceptions import GridFormatError, TruncatedPayloadError, UnsupportedError
from fracseg.gridio.base import Field2D, LabelMask, as_field, check_mask_supported
from fracseg.gridio.exceptions import map_io_exception

logger = logging.getLogger(__name__)

_SIDECAR_SUFFIX = ".q"
_SIDECAR_PATTERN = re.compile(r"^\s*Q\s*=\s*(\d+)\s*$")


def _sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + _SIDECAR_SUFFIX)


def _parse_pgm(blob: bytes, path) -> tuple[np.ndarray, int]:
    """
    Parses a binary PGM ("P5") byte string.

    Returns:
        (pixels as uint8/uint16 2-D array, maxval)
    """
    tokens = []
    pos = 0
    n = len(blob)
    while len(tokens) < 4:
        while pos < n and blob[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise GridFormatError(f"incomplete PGM header in {path}", path=path)
        if blob[pos:pos + 1] == b"#":
            end = blob.find(b"\n", pos)
            pos = n if end < 0 else end + 1
            continue
        start = pos
        while pos < n and not blob[pos:pos + 1].isspace() and blob[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(blob[start:pos])
    magic = tokens[0]
    if magic == b"P6":
        raise UnsupportedError(f"{path} is a colour PPM (P6); only 8-bit grayscale PGM (P5) is supported")
    if magic != b"P5":
        raise GridFormatError(f"{path}: expected binary PGM magic 'P5', got {magic!r}", path=path)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as e:
        raise GridFormatError(f"{path}: non-numeric PGM header field", path=path) from e
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise GridFormatError(f"{path}: invalid PGM header {width}x{height} maxval {maxval}", path=path)
    pos += 1  # single whitespace after maxval
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    itemsize = np.dtype(dtype).itemsize
    payload = blob[pos:pos + width * height * itemsize]
    if len(payload) < width * height * itemsize:
        raise TruncatedPayloadError(f"{path}: PGM payload shorter than {width}x{height}", path=path)
    pixels = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return pixels, maxval


def _read_bytes(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except Exception as e:
        raise map_io_exception(e, path) from e


def _write_bytes(path, blob: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except Exception as e:
        raise map_io_exception(e, path) from e


def write_pgm(pixels: np.ndarray, path: str | PathLike, comment: str | None = None) -> None:
    """Writes an 8-bit binary PGM, maxval 255."""
    pixels = np.asarray(pixels)
    height, width = pixels.shape
    header = b"P5\n"
    if comment:
        header += f"# {comment}\n".encode("ascii")
    header += f"{width} {height}\n255\n".encode("ascii")
    _write_bytes(path, header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def mask_to_pixels(mask: LabelMask) -> np.ndarray:
    scale = 255.0 / max(mask.q - 1, 1)
    # np.floor(x + 0.5) rounds half up, matching round(1 * 255 / 2) = 128
    return np.floor(mask.labels * scale + 0.5).astype(np.uint8)


def write_mask(mask: LabelMask, path: str | PathLike) -> None:
    """
    Writes a LabelMask as PGM; pixel = round(label * 255 / max(Q-1, 1)).
    A sidecar text file ``<path>.q`` records Q so that read_mask inverts exactly.
    """
    check_mask_supported(mask)
    write_pgm(mask_to_pixels(mask), path, comment=f"fracseg mask Q={mask.q}")
    try:
        _sidecar_path(path).write_text(f"Q={mask.q}\n", encoding="ascii")
    except Exception as e:
        raise map_io_exception(e, _sidecar_path(path)) from e


def read_mask(path: str | PathLike, q: int | None = None) -> LabelMask:
    """
    Reads a mask written by write_mask.

    Without a sidecar (and without ``q``), distinct gray levels are ranked
    and used as labels 0..Q-1, which also covers hand-made masks.
    """
    pixels, maxval = _parse_pgm(_read_bytes(path), path)
    if maxval != 255:
        raise GridFormatError(f"{path}: masks are stored with maxval 255, got {maxval}", path=path)
    if q is None:
        sidecar = _sidecar_path(path)
        if sidecar.exists():
            match = _SIDECAR_PATTERN.match(sidecar.read_text(encoding="ascii"))
            if match is None:
                raise GridFormatError(f"malformed mask sidecar {sidecar}", path=sidecar)
            q = int(match.group(1))
    if q is None:
        levels, labels = np.unique(pixels, return_inverse=True)
        logger.warning(f"{path}: no Q sidecar, ranking {len(levels)} gray levels as labels")
        return LabelMask(labels.reshape(pixels.shape).astype(np.int64), max(len(levels), 1))
    if q > 256:
        raise UnsupportedError(f"masks support at most 256 classes, got Q={q}")
    labels = np.floor(pixels.astype(np.float64) * max(q - 1, 1) / 255.0 + 0.5).astype(np.int64)
    return LabelMask(labels, q)


def import_grayscale(path: str | PathLike) -> Field2D:
    """Reads an 8-bit binary PGM and scales its values to [0, 1]."""
    blob = _read_bytes(path)
    if not blob.startswith((b"P5", b"P6")):
        raise GridFormatError(f"{path}: unsupported format, expected 8-bit binary PGM ('P5')", path=path)
    pixels, maxval = _parse_pgm(blob, path)
    if maxval > 255:
        raise UnsupportedError(f"{path}: 16-bit PGM (maxval {maxval}); expected 8-bit binary PGM ('P5')")
    return as_field(pixels.astype(np.float64) / float(maxval), name=str(path))


def export_grayscale(field, path: str | PathLike) -> None:
    """Writes a field as PGM after min-max scaling to 0..255 (viewing only, lossy)."""
    arr = as_field(field)
    lo, hi = float(arr.min()), float(arr.max())
    span = hi - lo if hi > lo else 1.0
    write_pgm(np.floor((arr - lo) / span * 255.0 + 0.5), path)
