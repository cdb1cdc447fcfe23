from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class SolverConfig(BaseModel):
    """
    Parameters shared by the TV, TVW and relaxed-Potts solvers.
    """
    lam: float = Field(1.0, gt=0.0, description="TV weight lambda")
    eta1: float = Field(1000.0, ge=0.0, description="penalty on the distance to sum_j w(j) = 0")
    eta2: float = Field(1000.0, ge=0.0, description="penalty on the distance to sum_j j w(j) = 1")
    sigma: float = Field(1.0, gt=0.0, description="dual step size")
    max_iter: int = Field(20_000, ge=1, description="iteration limit of the inner solver")
    tol: float = Field(1e-5, gt=0.0, description="relative stopping tolerance: duality gap for TV, iterate change otherwise")
    mu_outer_max: int = Field(20, ge=1, description="outer limit of the mean re-estimation loop")
    mu_tol: float = Field(1e-4, gt=0.0, description="tolerance on max_q |delta mu_q|")
    q: int = Field(2, ge=1, description="class count Q")
    variances: Optional[List[float]] = Field(None, description="per-class sigma_q^2; defaults to 1/2 each")
    step_rule: Literal["safe", "aggressive"] = Field("safe", description="primal step size rule")
    divergence_limit: float = Field(1e12, gt=0.0)
    monitor_every: int = Field(100, ge=1, description="objective monitoring period")

    @model_validator(mode="after")
    def check_variances(self):
        if self.variances is not None:
            if len(self.variances) != self.q:
                raise ValueError(f"{len(self.variances)} variances given for Q={self.q}")
            if any(v <= 0 for v in self.variances):
                raise ValueError("variances must be positive")
        return self

    def class_variances(self, default: float = 0.5) -> List[float]:
        return list(self.variances) if self.variances is not None else [default] * self.q

    @classmethod
    def from_settings(cls, settings, **overrides) -> "SolverConfig":
        values = dict(
            sigma=settings.SIGMA_DUAL,
            max_iter=settings.FBPD_MAX_ITER,
            tol=settings.STOP_TOL,
            mu_outer_max=settings.MU_OUTER_MAX,
            mu_tol=settings.MU_TOL,
            step_rule=settings.STEP_RULE,
            divergence_limit=settings.DIVERGENCE_LIMIT,
            variances=None,
        )
        values.update(overrides)
        return cls(**values)


class HistogramConfig(BaseModel):
    bins: int = Field(128, ge=8, description="uniform bins on [min, max]")
    smooth_bins: float = Field(3.0, gt=0.0, description="Gaussian smoothing std, in bins")
    fallback: Literal["peak", "otsu"] = Field("peak", description="rule used when there are fewer than Q-1 minima")

    @classmethod
    def from_settings(cls, settings) -> "HistogramConfig":
        return cls(bins=settings.HIST_BINS, smooth_bins=settings.HIST_SMOOTH_BINS, fallback=settings.HIST_FALLBACK)
