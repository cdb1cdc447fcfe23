from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from fracseg.schemas.synthesis_schemas import SynthConfig

Method = Literal["smooth", "tv", "tvw", "rms"]


class MethodGrid(BaseModel):
    """A segmentation method and the grid of its parameter (lambda, or sigma for smooth)."""
    method: Method
    params: List[float] = Field(..., min_length=1)

    @field_validator("params")
    def validate_params(cls, v):
        if any(p <= 0 for p in v):
            raise ValueError("method parameters must be positive")
        return v


class ExperimentConfig(BaseModel):
    """
    Benchmark protocol: R realizations with seeds seed_base + r, every method
    run over its parameter grid, scored against the decimated truth mask.
    Schema of experiment.json.
    """
    synthesis: SynthConfig
    methods: List[MethodGrid] = Field(..., min_length=1)
    realizations: int = Field(10, ge=1, description="realization count R")
    seed_base: int = Field(0, ge=0)
    output_dir: str = Field("bench-out", description="artifact directory")
    eta1: float = Field(1000.0, ge=0.0)
    eta2: float = Field(1000.0, ge=0.0)
    emit_artifacts: bool = Field(True, description="write per-run masks, maps and histograms")


class CellResult(BaseModel):
    method: Method
    param: float
    realization: int
    rate: Optional[float] = Field(None, ge=0.0, le=1.0, description="misclassification rate")
    seconds: float = Field(0.0, ge=0.0, description="wall time")
    converged: bool = True
    error: Optional[str] = None


class CellSummary(BaseModel):
    method: Method
    param: float
    median: Optional[float] = None
    lower_quartile: Optional[float] = None
    upper_quartile: Optional[float] = None
    runs: int = 0


class ExperimentReport(BaseModel):
    config: ExperimentConfig
    cells: List[CellResult] = Field(default_factory=list)
    summaries: List[CellSummary] = Field(default_factory=list)


class SegmentReport(BaseModel):
    """report.json of the segment command."""
    method: Method
    param: float
    q: int
    iterations: int = 0
    outer_iterations: int = 0
    converged: bool = True
    residual: float = 0.0
    means: List[float] = Field(default_factory=list)
    thresholds: List[float] = Field(default_factory=list)
    constraint_residuals: List[float] = Field(default_factory=list)
    empty_regions: List[int] = Field(default_factory=list)
    seconds: float = 0.0
