"""
Full-size benchmark checks on synthetic piecewise fields (N = 512, a few
realizations each). Deselected by default; run with ``pytest -m slow``.
"""
import numpy as np
import pytest

from fracseg.config import Settings
from fracseg.core.synthesis import ellipse_mask_spec, three_region_mask_spec
from fracseg.gridio.store import GridStore
from fracseg.schemas.experiment_schemas import ExperimentConfig, ExperimentReport, MethodGrid
from fracseg.schemas.synthesis_schemas import SynthConfig
from fracseg.services.evaluation_service import EvaluationService, best_parameter, is_non_increasing
from fracseg.services.segmentation_service import SegmentationService

pytestmark = pytest.mark.slow

N = 512
REALIZATIONS = 3

GRIDS = [
    MethodGrid(method="smooth", params=[2.0, 4.0, 8.0, 16.0]),
    MethodGrid(method="tv", params=[0.25, 0.5, 1.0, 2.0, 4.0, 8.0]),
    MethodGrid(method="tvw", params=[2.0, 4.0, 8.0, 16.0, 32.0]),
    MethodGrid(method="rms", params=[0.02, 0.05, 0.1, 0.2, 0.5, 1.0]),
]


@pytest.fixture(scope="module")
def benchmark_service(tmp_path_factory) -> EvaluationService:
    settings = Settings(_env_file=None, LOG_LEVEL="WARNING", LOG_CONFIG_FILE="", FBPD_MAX_ITER=5000, WORKERS=1)
    store = GridStore(root=tmp_path_factory.mktemp("bench"))
    return EvaluationService(settings=settings, segmentation_service=SegmentationService(settings, store), store=store)


def _experiment(h_values, mask, methods=GRIDS) -> ExperimentConfig:
    return ExperimentConfig(
        synthesis=SynthConfig(size=N, h_values=h_values, seed=0, mask=mask),
        methods=methods,
        realizations=REALIZATIONS,
        seed_base=100,
        emit_artifacts=False,
    )


def _best(report: ExperimentReport, method: str) -> float:
    return best_parameter(report, method)[1]


@pytest.fixture(scope="module")
def ellipse_report(benchmark_service) -> ExperimentReport:
    return benchmark_service.run_experiment(_experiment([0.5, 0.7], ellipse_mask_spec(N)), out_dir="ellipse")


def test_ellipse_benchmark_error_rates(ellipse_report):
    """椭圆基准 (0.5, 0.7): 三种 TV 方法最优参数下的中位误差 <= 10%"""
    for method in ("tv", "tvw", "rms"):
        assert _best(ellipse_report, method) <= 0.10, method
    assert all(c.error is None for c in ellipse_report.cells)
    tv_seconds = [c.seconds for c in ellipse_report.cells if c.method == "tv"]
    assert max(tv_seconds) <= 120.0


def test_smoothing_baseline_trails_tvw(ellipse_report):
    assert _best(ellipse_report, "smooth") >= 1.5 * _best(ellipse_report, "tvw")


def test_low_contrast_benchmark_ordering(benchmark_service):
    report = benchmark_service.run_experiment(_experiment([0.6, 0.7], ellipse_mask_spec(N)), out_dir="contrast")
    tvw, tv, smooth = _best(report, "tvw"), _best(report, "tv"), _best(report, "smooth")
    assert tvw <= 0.18
    assert tvw <= tv <= smooth


def test_three_region_benchmark(benchmark_service):
    methods = [g for g in GRIDS if g.method != "smooth"]
    report = benchmark_service.run_experiment(
        _experiment([0.2, 0.4, 0.7], three_region_mask_spec(N), methods), out_dir="three")
    for method in ("tv", "tvw", "rms"):
        assert _best(report, method) <= 0.15, method


def test_error_does_not_grow_with_the_regularity_gap(benchmark_service):
    cfg = _experiment([0.5, 0.6], ellipse_mask_spec(N))
    sweep = benchmark_service.run_delta_h_sweep(cfg, h1=0.5, deltas=[0.1, 0.2, 0.3, 0.4], out_dir="sweep")
    for method, rates in sweep.items():
        assert None not in rates, method
        # a small allowance for Monte-Carlo noise over a few realizations
        assert is_non_increasing(rates, tol=0.02), f"{method}: {np.round(rates, 4).tolist()}"
