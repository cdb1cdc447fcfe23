from pathlib import Path

import orjson
import pytest
import pytest_mock

from fracseg.config import Settings
from fracseg.exceptions import NonFiniteError, ParameterError, SegmentationError
from fracseg.gridio.store import GridStore
from fracseg.schemas.experiment_schemas import (
    CellResult,
    CellSummary,
    ExperimentConfig,
    ExperimentReport,
    MethodGrid,
)
from fracseg.services.evaluation_service import (
    RESULT_COLUMNS,
    EvaluationService,
    best_parameter,
    is_non_increasing,
    summarize,
)
from fracseg.services.segmentation_service import SegmentationService


@pytest.fixture
def segmentation_service(mock_global_settings: Settings, store: GridStore) -> SegmentationService:
    return SegmentationService(settings=mock_global_settings, store=store)


@pytest.fixture
def evaluation_service(mock_global_settings, segmentation_service, store) -> EvaluationService:
    """Fixture to create EvaluationService on a real GridStore rooted in tmp_path."""
    return EvaluationService(settings=mock_global_settings, segmentation_service=segmentation_service, store=store)


@pytest.fixture
def experiment(ellipse_synth_config) -> ExperimentConfig:
    return ExperimentConfig(
        synthesis=ellipse_synth_config,
        methods=[MethodGrid(method="smooth", params=[2.0]), MethodGrid(method="rms", params=[0.05])],
        realizations=2,
        seed_base=10,
        output_dir="bench",
    )


# --- Test run_experiment ---
def test_run_experiment_writes_report_and_artifacts(evaluation_service, experiment, tmp_path):
    """测试运行实验, 写出报告和每次实现的文件。"""
    # Act
    report = evaluation_service.run_experiment(experiment)

    # Assert
    assert len(report.cells) == 4
    assert [(c.method, c.realization) for c in report.cells] == [
        ("smooth", 0), ("rms", 0), ("smooth", 1), ("rms", 1)]
    for cell in report.cells:
        assert cell.error is None
        assert 0.0 <= cell.rate <= 1.0
    assert [s.runs for s in report.summaries] == [2, 2]

    out = tmp_path / "bench"
    saved = orjson.loads((out / "report.json").read_bytes())
    assert saved["config"]["realizations"] == 2
    assert len(saved["cells"]) == 4
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert len(lines) == 5
    for name in ("truth.pgm", "hhat.f2d", "hhat_hist.csv", "smooth_2_mask.pgm", "rms_0.05_h.f2d", "rms_0.05_hist.csv"):
        assert (out / "r01" / name).is_file()


def test_run_experiment_is_deterministic(evaluation_service, experiment, tmp_path):
    first = evaluation_service.run_experiment(experiment, out_dir="a")
    second = evaluation_service.run_experiment(experiment, out_dir="b")
    assert [c.rate for c in first.cells] == [c.rate for c in second.cells]


def test_run_experiment_worker_count_does_not_change_results(evaluation_service, experiment):
    serial = evaluation_service.run_experiment(experiment, out_dir="serial", workers=1)
    pooled = evaluation_service.run_experiment(experiment, out_dir="pooled", workers=2)
    assert [(c.method, c.param, c.realization, c.rate) for c in pooled.cells] == \
           [(c.method, c.param, c.realization, c.rate) for c in serial.cells]


def test_run_experiment_records_failing_cells(
    evaluation_service, segmentation_service, experiment, mocker: pytest_mock.MockerFixture
):
    """测试单元失败时记录错误并继续。"""
    # Arrange
    mocker.patch.object(segmentation_service, "segment", side_effect=ParameterError("bad lambda"))

    # Act
    report = evaluation_service.run_experiment(experiment.model_copy(update={"emit_artifacts": False}))

    # Assert
    assert all(c.rate is None and c.error == "bad lambda" and not c.converged for c in report.cells)
    assert all(s.runs == 0 and s.median is None for s in report.summaries)
    with pytest.raises(ParameterError):
        best_parameter(report, "smooth")


def test_run_experiment_with_mocked_store(mock_global_settings, experiment, mocker: pytest_mock.MockerFixture):
    """测试服务层只通过 GridStore 写文件。"""
    # Arrange
    mock_store = mocker.create_autospec(GridStore, instance=True)
    segmentation = SegmentationService(settings=mock_global_settings, store=mock_store)
    service = EvaluationService(settings=mock_global_settings, segmentation_service=segmentation, store=mock_store)
    cfg = experiment.model_copy(update={"emit_artifacts": False, "realizations": 1})

    # Act
    service.run_experiment(cfg, out_dir="out")

    # Assert
    mock_store.ensure_dir.assert_called_once_with(Path("out"))
    payload, path = mock_store.write_json.call_args.args
    assert path == Path("out") / "report.json"
    assert len(payload["cells"]) == 2
    mock_store.write_csv.assert_called_once()
    mock_store.write_mask.assert_not_called()


def test_run_experiment_keeps_going_when_one_method_fails(
    evaluation_service, segmentation_service, experiment, mocker: pytest_mock.MockerFixture
):
    """测试某个方法失败时, 其余单元照常评分。"""
    # Arrange
    original = segmentation_service.segment

    def fail_rms(analysis, method, param, q, eta1, eta2):
        if method == "rms":
            raise SegmentationError("rms solver failed")
        return original(analysis, method, param, q, eta1, eta2)

    mocker.patch.object(segmentation_service, "segment", side_effect=fail_rms)

    # Act
    report = evaluation_service.run_experiment(experiment.model_copy(update={"emit_artifacts": False}))

    # Assert
    smooth = [c for c in report.cells if c.method == "smooth"]
    rms = [c for c in report.cells if c.method == "rms"]
    assert all(c.error is None and 0.0 <= c.rate <= 1.0 for c in smooth)
    assert all(c.error == "rms solver failed" and c.rate is None and not c.converged for c in rms)
    assert [s.runs for s in report.summaries] == [2, 0]


def test_run_experiment_records_unexpected_errors(
    evaluation_service, segmentation_service, experiment, mocker: pytest_mock.MockerFixture
):
    mocker.patch.object(segmentation_service, "segment", side_effect=RuntimeError("boom"))

    report = evaluation_service.run_experiment(experiment.model_copy(update={"emit_artifacts": False}))

    assert len(report.cells) == 4
    assert all(c.error == "unexpected error: boom" for c in report.cells)


def test_run_experiment_survives_a_failed_analysis(
    evaluation_service, segmentation_service, experiment, mocker: pytest_mock.MockerFixture, tmp_path
):
    """测试某次实现无法估计正则性时, 该实现的所有单元记为失败, 其他实现照常运行。"""
    # Arrange
    original = segmentation_service.analyse
    calls = []

    def fail_first(field):
        calls.append(field)
        if len(calls) == 1:
            raise NonFiniteError("leaders are not finite")
        return original(field)

    mocker.patch.object(segmentation_service, "analyse", side_effect=fail_first)

    # Act
    report = evaluation_service.run_experiment(experiment)

    # Assert
    first = [c for c in report.cells if c.realization == 0]
    second = [c for c in report.cells if c.realization == 1]
    assert [(c.method, c.param) for c in first] == [("smooth", 2.0), ("rms", 0.05)]
    assert all(c.rate is None and not c.converged and c.error == "leaders are not finite" for c in first)
    assert all(c.error is None and c.rate is not None for c in second)
    assert [s.runs for s in report.summaries] == [1, 1]
    assert not (tmp_path / "bench" / "r00").exists()
    assert (tmp_path / "bench" / "r01" / "hhat.f2d").is_file()
    saved = orjson.loads((tmp_path / "bench" / "report.json").read_bytes())
    assert saved["cells"][0]["rate"] is None


# --- Test the delta-h sweep ---
def test_run_delta_h_sweep(evaluation_service, experiment, tmp_path):
    cfg = experiment.model_copy(update={"realizations": 1, "methods": [MethodGrid(method="smooth", params=[2.0])]})
    sweep = evaluation_service.run_delta_h_sweep(cfg, h1=0.4, deltas=[0.1, 0.4], out_dir="sweep")
    assert list(sweep) == ["smooth"]
    assert len(sweep["smooth"]) == 2
    assert all(0.0 <= r <= 1.0 for r in sweep["smooth"])
    assert (tmp_path / "sweep" / "dh_0.1" / "report.json").is_file()
    saved = orjson.loads((tmp_path / "sweep" / "sweep.json").read_bytes())
    assert saved["deltas"] == [0.1, 0.4]


def test_run_delta_h_sweep_rejects_gap_outside_range(evaluation_service, experiment):
    with pytest.raises(ParameterError):
        evaluation_service.run_delta_h_sweep(experiment, h1=0.8, deltas=[0.3])


# --- Test summaries ---
def test_summarize_quartiles(experiment):
    cells = [CellResult(method="smooth", param=2.0, realization=r, rate=rate)
             for r, rate in enumerate([0.1, 0.2, 0.3, 0.4])]
    cells.append(CellResult(method="smooth", param=2.0, realization=4, rate=None, error="failed"))
    smooth, rms = summarize(cells, experiment)
    assert smooth.runs == 4
    assert smooth.median == pytest.approx(0.25)
    assert smooth.lower_quartile == pytest.approx(0.175)
    assert smooth.upper_quartile == pytest.approx(0.325)
    assert rms.runs == 0 and rms.median is None


def test_best_parameter_prefers_smaller_value_on_ties(experiment):
    report = ExperimentReport(config=experiment, summaries=[
        CellSummary(method="tv", param=0.5, median=0.1, runs=3),
        CellSummary(method="tv", param=0.1, median=0.1, runs=3),
        CellSummary(method="tv", param=1.0, median=0.3, runs=3),
        CellSummary(method="rms", param=0.1, median=0.05, runs=3),
    ])
    assert best_parameter(report, "tv") == (0.1, 0.1)
    assert best_parameter(report, "rms") == (0.1, 0.05)


def test_is_non_increasing():
    assert is_non_increasing([0.4, 0.3, 0.3, 0.1])
    assert not is_non_increasing([0.4, 0.5])
    assert is_non_increasing([0.4, 0.41], tol=0.02)
    assert is_non_increasing([])
