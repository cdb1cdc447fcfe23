import pytest
from pydantic import ValidationError

from fracseg.config import Settings
from fracseg.exceptions import (
    DivergenceError,
    FracsegError,
    GridFormatError,
    GridIOError,
    NonFiniteError,
    ParameterError,
    SegmentationError,
    TruncatedPayloadError,
    UnsupportedError,
    exit_code_for,
)


def test_settings_defaults():
    s = Settings(_env_file=None)
    assert (s.J1, s.J2, s.GAMMA, s.WAVELET) == (1, 4, 1.0, "db2")
    assert s.STEP_RULE == "safe"


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("FRACSEG_J2", "5")
    monkeypatch.setenv("FRACSEG_LOG_LEVEL", "debug")
    s = Settings(_env_file=None)
    assert s.J2 == 5
    assert s.LOG_LEVEL == "DEBUG"


@pytest.mark.parametrize("overrides", [
    {"J1": 3, "J2": 3},
    {"WAVELET": "haar"},
    {"WAVELET": "sym4"},
    {"LOG_LEVEL": "verbose"},
    {"GAMMA": -0.5},
    {"STEP_RULE": "fast"},
])
def test_settings_validation(overrides):
    with pytest.raises(ValidationError):
        Settings(_env_file=None, **overrides)


@pytest.mark.parametrize("exc, code", [
    (TruncatedPayloadError(), 65),
    (GridFormatError(), 65),
    (NonFiniteError(), 65),
    (GridIOError(path="x"), 74),
    (UnsupportedError(), 69),
    (ParameterError(), 64),
    (DivergenceError(tau=0.1, sigma=1.0), 70),
    (SegmentationError(), 1),
    (FracsegError(), 1),
    (RuntimeError(), 1),
])
def test_exit_code_for(exc, code):
    assert exit_code_for(exc) == code


def test_exception_details():
    err = DivergenceError("blew up", tau=0.1, sigma=1.0)
    assert err.detail == "tau=0.1, sigma=1.0"
    assert GridIOError("missing", path="a/b").detail == "a/b"
