# fracseg/config.py
from typing import Literal

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Multiscale analysis
    WAVELET: str = Field("db2", description="Daubechies wavelet name understood by PyWavelets")
    J1: int = Field(1, ge=1, description="finest regression scale")
    J2: int = Field(4, ge=2, description="coarsest regression scale")
    GAMMA: float = Field(1.0, ge=0.0, description="fractional integration parameter")
    GAMMA_PLACEMENT: Literal["per_coefficient", "outer"] = Field(
        "per_coefficient", description="2^{j'gamma} per contributing coefficient, or 2^{j gamma} on the leader")
    LEADER_FLOOR: float = Field(1e-300, gt=0.0, description="floor applied to leaders before log2")

    # Solvers
    SIGMA_DUAL: float = Field(1.0, gt=0.0, description="dual step size sigma")
    STOP_TOL: float = Field(1e-5, gt=0.0, description="relative stopping tolerance: duality gap for TV, iterate change otherwise")
    TV_MAX_ITER: int = Field(100_000, ge=1)
    FBPD_MAX_ITER: int = Field(20_000, ge=1)
    MU_OUTER_MAX: int = Field(20, ge=1)
    MU_TOL: float = Field(1e-4, gt=0.0)
    POTTS_VARIANCE: float = Field(0.5, gt=0.0, description="sigma_q^2 of the Gaussian likelihood")
    STEP_RULE: Literal["safe", "aggressive"] = Field("safe", description="primal step size rule")
    DIVERGENCE_LIMIT: float = Field(1e12, gt=0.0)

    # Histogram thresholding
    HIST_BINS: int = Field(128, ge=8)
    HIST_SMOOTH_BINS: float = Field(3.0, gt=0.0, description="std of the histogram smoothing kernel, in bins")
    HIST_FALLBACK: Literal["peak", "otsu"] = Field(
        "peak", description="thresholds missing from the histogram minima: at the largest peak, or multi-Otsu")

    # Runtime
    LOG_LEVEL: str = Field("INFO", description="root log level")
    LOG_CONFIG_FILE: str = Field("", description="optional dictConfig JSON file, e.g. logging_config.json")
    WORKERS: int = Field(1, ge=1, description="process pool size for benchmark realizations")

    @field_validator("WAVELET")
    def validate_wavelet(cls, v):
        if not v.startswith("db") or not v[2:].isdigit() or int(v[2:]) < 1:
            raise ValueError('WAVELET 必须是 Daubechies 小波, 例如 "db2"')
        return v

    @field_validator("LOG_LEVEL")
    def validate_log_level(cls, v):
        v = v.upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown LOG_LEVEL {v}")
        return v

    @model_validator(mode="after")
    def check_scale_range(self):
        if self.J2 <= self.J1:
            raise ValueError(f"J2 ({self.J2}) must be larger than J1 ({self.J1})")
        return self

    model_config = SettingsConfigDict(env_prefix="FRACSEG_", env_file=".env", extra="ignore")


settings = Settings()
