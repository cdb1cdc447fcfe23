import logging

import numpy as np
import pytest
import pytest_mock

from fracseg.config import Settings
from fracseg.core.synthesis import ellipse_mask_spec
from fracseg.gridio.store import GridStore
from fracseg.schemas.synthesis_schemas import SynthConfig


# --- Global settings for tests (autouse) ---
@pytest.fixture(autouse=True, scope="function")
def mock_global_settings(mocker: pytest_mock.MockerFixture) -> Settings:
    """
    Replaces the module-level settings with a fixed instance that ignores the
    environment and any .env file, with iteration limits sized for unit tests.
    """
    test_settings = Settings(
        _env_file=None,
        J1=1,
        J2=3,
        TV_MAX_ITER=5000,
        FBPD_MAX_ITER=3000,
        MU_OUTER_MAX=5,
        LOG_LEVEL="WARNING",
        LOG_CONFIG_FILE="",
        WORKERS=1,
    )
    mocker.patch("fracseg.config.settings", test_settings)
    mocker.patch("fracseg.dependencies.get_settings", return_value=test_settings)
    mocker.patch("fracseg.main.settings", test_settings)
    yield test_settings


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def store(tmp_path) -> GridStore:
    return GridStore(root=tmp_path)


@pytest.fixture
def ellipse_synth_config() -> SynthConfig:
    """64 x 64 two-region field, h = (0.5, 0.7), fixed seed."""
    return SynthConfig(size=64, h_values=[0.5, 0.7], seed=7, mask=ellipse_mask_spec(64))


@pytest.fixture
def two_valued_map() -> tuple[np.ndarray, np.ndarray]:
    """Noiseless 32 x 32 regularity map: 0.7 inside a centred ellipse, 0.5 outside; returns (map, labels)."""
    n = 32
    k1, k2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    inside = ((k1 - n / 2) / (0.3 * n)) ** 2 + ((k2 - n / 2) / (0.25 * n)) ** 2 <= 1.0
    return np.where(inside, 0.7, 0.5), inside.astype(np.int64)


@pytest.fixture(autouse=True)
def reset_package_logger():
    """CLI tests apply dictConfig, which stops the package logger from propagating to caplog."""
    yield
    package_logger = logging.getLogger("fracseg")
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
    package_logger.propagate = True
    package_logger.setLevel(logging.NOTSET)
    root = logging.getLogger()
    for handler in list(root.handlers):
        # keep pytest's own capture handlers
        if type(handler).__module__.startswith(("rich.", "logging")):
            root.removeHandler(handler)
