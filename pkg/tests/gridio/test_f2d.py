import struct

import numpy as np
import pytest

from fracseg.exceptions import GridFormatError, GridIOError, NonFiniteError, TruncatedPayloadError
from fracseg.gridio.f2d import read_field, read_stack, write_field, write_stack


def test_write_field_layout(tmp_path):
    """Header is magic + little-endian u32 rows, cols; payload is row-major f64."""
    path = tmp_path / "f.f2d"
    field = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    write_field(field, path)
    blob = path.read_bytes()
    assert blob[:4] == b"F2D1"
    assert struct.unpack("<II", blob[4:12]) == (2, 3)
    assert len(blob) == 12 + 6 * 8
    assert struct.unpack("<d", blob[12 + 8:12 + 16])[0] == 2.0


def test_field_round_trip_is_bit_exact(tmp_path, rng):
    path = tmp_path / "r.f2d"
    field = rng.standard_normal((5, 7)) * 1e-300
    write_field(field, path)
    back = read_field(path)
    assert back.dtype == np.float64
    assert back.tobytes() == field.tobytes()


def test_read_field_bad_magic(tmp_path):
    path = tmp_path / "bad.f2d"
    path.write_bytes(b"XXXX" + struct.pack("<II", 1, 1) + struct.pack("<d", 0.0))
    with pytest.raises(GridFormatError):
        read_field(path)


def test_read_field_truncated_payload(tmp_path):
    path = tmp_path / "short.f2d"
    path.write_bytes(b"F2D1" + struct.pack("<II", 4, 4) + b"\x00" * (8 * 15))
    with pytest.raises(TruncatedPayloadError):
        read_field(path)


def test_read_field_non_finite(tmp_path):
    path = tmp_path / "nan.f2d"
    path.write_bytes(b"F2D1" + struct.pack("<II", 1, 2) + struct.pack("<dd", 1.0, float("nan")))
    with pytest.raises(NonFiniteError):
        read_field(path)


def test_write_field_rejects_non_finite(tmp_path):
    with pytest.raises(NonFiniteError):
        write_field(np.array([[np.inf]]), tmp_path / "x.f2d")


def test_read_field_missing_file(tmp_path):
    with pytest.raises(GridIOError) as exc_info:
        read_field(tmp_path / "missing.f2d")
    assert exc_info.value.path == tmp_path / "missing.f2d"


def test_stack_round_trip(tmp_path, rng):
    path = tmp_path / "s.f2ds"
    grids = [rng.standard_normal((4, 4)) for _ in range(3)]
    write_stack(grids, j1=2, gamma=0.5, path=path)
    back, j1, gamma = read_stack(path)
    assert (j1, gamma) == (2, 0.5)
    assert len(back) == 3
    for a, b in zip(grids, back):
        assert a.tobytes() == b.tobytes()


def test_read_stack_rejects_plain_field(tmp_path):
    path = tmp_path / "plain.f2d"
    write_field(np.zeros((2, 2)), path)
    with pytest.raises(GridFormatError):
        read_stack(path)
