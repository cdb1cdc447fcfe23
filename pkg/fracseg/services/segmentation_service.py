# fracseg/services/segmentation_service.py
import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fracseg.config import Settings
from fracseg.core.multiscale import LeaderStack, compute_leader_stack
from fracseg.core.regression import estimate_h, gaussian_smooth, ols_weights
from fracseg.core.segmenters import (
    extract_labels,
    potts_segment,
    threshold_histogram,
    tv_denoise,
    tvw_joint,
)
from fracseg.core.synthesis import synth_piecewise
from fracseg.exceptions import FracsegError, ParameterError, SegmentationError
from fracseg.gridio.base import Field2D, LabelMask
from fracseg.gridio.store import GridStore
from fracseg.schemas.experiment_schemas import Method, SegmentReport
from fracseg.schemas.solver_schemas import HistogramConfig, SolverConfig
from fracseg.schemas.synthesis_schemas import SynthConfig

logger = logging.getLogger(__name__)


@dataclass
class Analysis:
    """Leaders of one field and the fixed-weight regularity estimate derived from them."""
    stack: LeaderStack
    hhat: Field2D


@dataclass
class SegmentOutcome:
    mask: LabelMask
    h_map: Field2D
    report: SegmentReport


class SegmentationService:
    """Service layer for the estimation and segmentation pipeline."""

    def __init__(self, settings: Settings, store: GridStore):
        """
        Args:
            settings: runtime configuration (scale range, gamma, solver defaults).
            store: artifact access layer used by the file-level operations.
        """
        self.settings = settings
        self.store = store

    @property
    def j_range(self) -> tuple[int, int]:
        return self.settings.J1, self.settings.J2

    def solver_config(self, **overrides) -> SolverConfig:
        return SolverConfig.from_settings(self.settings, **overrides)

    # -------------------------------------------------------- in-memory pipeline

    def crop_to_dyadic(self, field: Field2D) -> Field2D:
        """Crops to the largest size divisible by 2^J2 on both axes."""
        block = 2 ** self.settings.J2
        rows = field.shape[0] - field.shape[0] % block
        cols = field.shape[1] - field.shape[1] % block
        if rows == 0 or cols == 0:
            raise ParameterError(f"image {field.shape} is smaller than 2^{self.settings.J2}")
        if (rows, cols) != field.shape:
            logger.warning(f"cropping image from {field.shape} to {(rows, cols)} (multiple of {block})")
            return field[:rows, :cols]
        return field

    def leaders(self, field: Field2D, gamma: Optional[float] = None) -> LeaderStack:
        gamma = self.settings.GAMMA if gamma is None else gamma
        return compute_leader_stack(
            field,
            self.j_range,
            gamma=gamma,
            wavelet=self.settings.WAVELET,
            placement=self.settings.GAMMA_PLACEMENT,
            floor=self.settings.LEADER_FLOOR,
        )

    def estimate(self, stack: LeaderStack, smooth_sigma: Optional[float] = None) -> Field2D:
        hhat = estimate_h(stack, ols_weights(stack.j1, stack.j2))
        if smooth_sigma is not None:
            hhat = gaussian_smooth(hhat, smooth_sigma)
        return hhat

    def analyse(self, field: Field2D) -> Analysis:
        stack = self.leaders(field)
        return Analysis(stack=stack, hhat=self.estimate(stack))

    def segment(
        self,
        analysis: Analysis,
        method: Method,
        param: float,
        q: int,
        eta1: float = 1000.0,
        eta2: float = 1000.0,
    ) -> SegmentOutcome:
        """
        Runs one method. ``param`` is lambda for tv, tvw and rms and the
        smoothing standard deviation (pixels) for smooth.
        """
        if q < 1:
            raise ParameterError(f"class count must be >= 1, got {q}")
        hist_cfg = HistogramConfig.from_settings(self.settings)
        start = time.perf_counter()
        report = SegmentReport(method=method, param=param, q=q)
        try:
            if method == "smooth":
                h_map = gaussian_smooth(analysis.hhat, param)
                cut = threshold_histogram(h_map, q, hist_cfg)
                mask, report.thresholds = cut.mask, cut.thresholds
            elif method == "tv":
                cfg = self.solver_config(lam=param, q=q, max_iter=self.settings.TV_MAX_ITER)
                res = tv_denoise(analysis.hhat, param, cfg)
                h_map = res.h
                cut = threshold_histogram(h_map, q, hist_cfg)
                mask, report.thresholds = cut.mask, cut.thresholds
                report.iterations, report.converged, report.residual = res.iterations, res.converged, res.residual
            elif method == "tvw":
                cfg = self.solver_config(lam=param, eta1=eta1, eta2=eta2, q=q)
                res = tvw_joint(analysis.stack, param, eta1, eta2, cfg)
                h_map = res.h
                cut = threshold_histogram(h_map, q, hist_cfg)
                mask, report.thresholds = cut.mask, cut.thresholds
                report.iterations, report.converged, report.residual = res.iterations, res.converged, res.residual
                report.constraint_residuals = res.constraint_residuals
            elif method == "rms":
                cfg = self.solver_config(lam=param, q=q, variances=[self.settings.POTTS_VARIANCE] * q)
                res = potts_segment(analysis.hhat, q, param, cfg)
                h_map = analysis.hhat
                mask = extract_labels(res.theta) if q > 1 else LabelMask(np.zeros(h_map.shape, dtype=np.int64), 1)
                report.iterations, report.outer_iterations = res.iterations, res.outer_iterations
                report.converged, report.residual = res.converged, res.residual
                report.means, report.empty_regions = res.means, res.empty_regions
            else:
                raise ParameterError(f"unknown segmentation method {method!r}")
        except FracsegError:
            raise
        except Exception as e:
            raise SegmentationError(f"{method} segmentation failed: {e}") from e
        report.seconds = time.perf_counter() - start
        logger.info(f"segment {method} param={param:g} Q={q}: {report.seconds:.2f}s, converged={report.converged}")
        return SegmentOutcome(mask=mask, h_map=h_map, report=report)

    # -------------------------------------------------------- file-level operations

    def synthesize_to(self, cfg: SynthConfig, field_path, mask_path=None, preview_path=None) -> tuple[Field2D, LabelMask]:
        field, mask = synth_piecewise(cfg)
        self.store.write_field(field, field_path)
        if mask_path is not None:
            self.store.write_mask(mask, mask_path)
        if preview_path is not None:
            self.store.export_grayscale(field, preview_path)
        return field, mask

    def leaders_to(self, in_path, out_path, gamma: Optional[float] = None) -> LeaderStack:
        field = self.crop_to_dyadic(self.store.read_image(in_path))
        stack = self.leaders(field, gamma)
        self.store.write_leaders(stack, out_path)
        return stack

    def estimate_to(self, in_path, out_path, gamma: Optional[float] = None, smooth_sigma: Optional[float] = None) -> Field2D:
        stack = self.store.read_leaders(in_path)
        if gamma is not None and gamma != stack.gamma:
            # the regression removes the gamma the leaders were computed with
            logger.warning(f"leaders were computed with gamma={stack.gamma}; ignoring requested gamma={gamma}")
        if (stack.j1, stack.j2) != self.j_range:
            logger.info(f"using the stack's scale range ({stack.j1}, {stack.j2})")
        hhat = self.estimate(stack, smooth_sigma)
        self.store.write_field(hhat, out_path)
        return hhat

    def segment_to(
        self,
        in_path,
        method: Method,
        param: float,
        q: int,
        mask_path,
        h_path=None,
        report_path=None,
        eta1: float = 1000.0,
        eta2: float = 1000.0,
    ) -> SegmentOutcome:
        field = self.crop_to_dyadic(self.store.read_image(in_path))
        outcome = self.segment(self.analyse(field), method, param, q, eta1, eta2)
        self.store.write_mask(outcome.mask, mask_path)
        if h_path is not None:
            self.store.write_field(outcome.h_map, h_path)
        if report_path is not None:
            self.store.write_json(outcome.report.model_dump(), report_path)
        return outcome

    def with_overrides(self, **overrides) -> "SegmentationService":
        """A service on a copy of the settings with the non-None overrides applied and validated."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if not changes:
            return self
        settings = Settings(**{**self.settings.model_dump(), **changes})
        return SegmentationService(settings=settings, store=self.store)
