# fracseg/services/evaluation_service.py
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from fracseg.config import Settings
from fracseg.core.scoring import emit_histogram, misclassification
from fracseg.core.synthesis import synth_piecewise
from fracseg.exceptions import FracsegError, ParameterError
from fracseg.gridio.base import decimate_mask
from fracseg.gridio.store import GridStore
from fracseg.schemas.experiment_schemas import (
    CellResult,
    CellSummary,
    ExperimentConfig,
    ExperimentReport,
    Method,
)
from fracseg.services.segmentation_service import SegmentationService

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["method", "param", "realization", "rate", "seconds", "converged"]


def _cell_dir(r: int) -> str:
    return f"r{r:02d}"


def _cell_stem(method: str, param: float) -> str:
    return f"{method}_{param:g}"


def run_realization(
    segmentation: SegmentationService,
    store: GridStore,
    cfg: ExperimentConfig,
    r: int,
    out_dir: Optional[Path] = None,
) -> List[CellResult]:
    """
    Synthesises realization r (seed seed_base + r) and runs every method over
    its grid. A failing cell is recorded with its error and the loop goes on;
    when the field itself cannot be synthesised or analysed, every cell of the
    realization is recorded as failed.
    """
    synth = cfg.synthesis.model_copy(update={"seed": cfg.seed_base + r})
    start = time.perf_counter()
    try:
        field, mask = synth_piecewise(synth)
        truth = decimate_mask(mask)
        q = mask.q
        analysis = segmentation.analyse(field)
        if out_dir is not None:
            run_dir = store.ensure_dir(out_dir / _cell_dir(r))
            store.write_mask(truth, run_dir / "truth.pgm")
            store.write_field(analysis.hhat, run_dir / "hhat.f2d")
            store.write_histogram(emit_histogram(analysis.hhat), run_dir / "hhat_hist.csv")
    except Exception as e:
        message = e.message if isinstance(e, FracsegError) else f"unexpected error: {e}"
        logger.error(f"realization {r} could not be prepared, every cell is marked failed: {message}")
        elapsed = time.perf_counter() - start
        return [CellResult(method=grid.method, param=param, realization=r, rate=None,
                           seconds=elapsed, converged=False, error=message)
                for grid in cfg.methods for param in grid.params]

    cells = []
    for grid in cfg.methods:
        for param in grid.params:
            start = time.perf_counter()
            try:
                outcome = segmentation.segment(analysis, grid.method, param, q, cfg.eta1, cfg.eta2)
                rate = misclassification(outcome.mask, truth, analysis.hhat, truth_h=synth.h_values)
                cell = CellResult(method=grid.method, param=param, realization=r, rate=rate,
                                  seconds=outcome.report.seconds, converged=outcome.report.converged)
                if out_dir is not None:
                    stem = run_dir / _cell_stem(grid.method, param)
                    store.write_mask(outcome.mask, f"{stem}_mask.pgm")
                    store.write_field(outcome.h_map, f"{stem}_h.f2d")
                    store.write_histogram(emit_histogram(outcome.h_map), f"{stem}_hist.csv")
            except Exception as e:
                message = e.message if isinstance(e, FracsegError) else f"unexpected error: {e}"
                logger.error(f"realization {r}, {grid.method} param={param:g} failed: {message}")
                cell = CellResult(method=grid.method, param=param, realization=r, rate=None,
                                  seconds=time.perf_counter() - start, converged=False, error=message)
            cells.append(cell)
    return cells


def _realization_job(payload: dict) -> List[dict]:
    """Process-pool entry point: rebuilds the services from plain data."""
    settings = Settings(**payload["settings"])
    store = GridStore()
    segmentation = SegmentationService(settings=settings, store=store)
    cfg = ExperimentConfig.model_validate(payload["config"])
    out_dir = Path(payload["out_dir"]) if payload["out_dir"] is not None else None
    cells = run_realization(segmentation, store, cfg, payload["r"], out_dir)
    return [c.model_dump() for c in cells]


def summarize(cells: Sequence[CellResult], cfg: ExperimentConfig) -> List[CellSummary]:
    """Median and quartiles of the rate per (method, param), over realizations that produced one."""
    summaries = []
    for grid in cfg.methods:
        for param in grid.params:
            rates = [c.rate for c in cells if c.method == grid.method and c.param == param and c.rate is not None]
            if rates:
                lower, median, upper = np.percentile(rates, [25, 50, 75])
                summaries.append(CellSummary(method=grid.method, param=param, median=float(median),
                                             lower_quartile=float(lower), upper_quartile=float(upper),
                                             runs=len(rates)))
            else:
                summaries.append(CellSummary(method=grid.method, param=param, runs=0))
    return summaries


def best_parameter(report: ExperimentReport, method: Method) -> tuple[float, float]:
    """(grid value, median rate) minimising the median rate; the smaller value wins ties."""
    candidates = [s for s in report.summaries if s.method == method and s.median is not None]
    if not candidates:
        raise ParameterError(f"no successful runs for method {method!r}")
    best = min(candidates, key=lambda s: (s.median, s.param))
    return best.param, best.median


def is_non_increasing(values: Sequence[float], tol: float = 0.0) -> bool:
    return all(b <= a + tol for a, b in zip(values, values[1:]))


class EvaluationService:
    """Service layer for benchmark experiments."""

    def __init__(self, settings: Settings, segmentation_service: SegmentationService, store: GridStore):
        self.settings = settings
        self.segmentation_service = segmentation_service
        self.store = store

    def run_experiment(self, cfg: ExperimentConfig, out_dir=None, workers: Optional[int] = None) -> ExperimentReport:
        """
        Runs R realizations, scores every (method, param) cell and writes
        report.json, results.csv and the per-run artifacts under ``out_dir``
        (defaults to cfg.output_dir). Cells are merged in realization order,
        so the report does not depend on the worker count.
        """
        workers = workers or self.settings.WORKERS
        out = Path(out_dir if out_dir is not None else cfg.output_dir)
        self.store.ensure_dir(out)
        artifact_dir = out if cfg.emit_artifacts else None
        logger.info(f"experiment: R={cfg.realizations}, methods={[m.method for m in cfg.methods]}, workers={workers}")

        cells: List[CellResult] = []
        if workers > 1 and cfg.realizations > 1:
            payloads = [
                {
                    "settings": self.settings.model_dump(),
                    "config": cfg.model_dump(),
                    "r": r,
                    "out_dir": str(self.store.resolve(artifact_dir)) if artifact_dir is not None else None,
                }
                for r in range(cfg.realizations)
            ]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for dumped in pool.map(_realization_job, payloads):
                    cells.extend(CellResult(**c) for c in dumped)
        else:
            for r in range(cfg.realizations):
                cells.extend(run_realization(self.segmentation_service, self.store, cfg, r, artifact_dir))

        report = ExperimentReport(config=cfg, cells=cells, summaries=summarize(cells, cfg))
        self.store.write_json(report.model_dump(), out / "report.json")
        self.store.write_csv(
            RESULT_COLUMNS,
            ([c.method, repr(c.param), c.realization, "" if c.rate is None else repr(c.rate),
              f"{c.seconds:.6f}", str(c.converged).lower()] for c in cells),
            out / "results.csv",
        )
        failed = sum(1 for c in cells if c.error is not None)
        if failed:
            logger.warning(f"{failed} of {len(cells)} cells failed; see report.json")
        logger.info(f"experiment done: {len(cells)} cells written to {out}")
        return report

    def run_delta_h_sweep(
        self,
        cfg: ExperimentConfig,
        h1: float,
        deltas: Sequence[float],
        out_dir=None,
    ) -> Dict[str, List[Optional[float]]]:
        """
        Two-region experiments with h = (h1, h1 + delta); returns, per method,
        the best-parameter median rate for each delta (None when every run failed).
        """
        if cfg.synthesis.mask.class_count() not in (None, 2):
            raise ParameterError("the regularity-gap sweep needs a two-region geometry")
        out = Path(out_dir if out_dir is not None else cfg.output_dir)
        sweep: Dict[str, List[Optional[float]]] = {g.method: [] for g in cfg.methods}
        for delta in deltas:
            h2 = h1 + delta
            if not 0.0 < h2 < 1.0:
                raise ParameterError(f"h1 + delta = {h2} leaves (0, 1)")
            synth = cfg.synthesis.model_copy(update={"h_values": [h1, h2]})
            sub = cfg.model_copy(update={"synthesis": synth})
            report = self.run_experiment(sub, out_dir=out / f"dh_{delta:g}")
            for grid in cfg.methods:
                try:
                    sweep[grid.method].append(best_parameter(report, grid.method)[1])
                except ParameterError:
                    sweep[grid.method].append(None)
            logger.info(f"delta h={delta:g}: best median rates {{{', '.join(f'{m}: {v[-1]}' for m, v in sweep.items())}}}")
        self.store.write_json({"h1": h1, "deltas": list(deltas), "best_median_rates": sweep}, out / "sweep.json")
        return sweep
