# fracseg/routers/bench.py
import logging
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from fracseg.dependencies import get_evaluation_service
from fracseg.exceptions import ParameterError, handle_exception
from fracseg.schemas.experiment_schemas import ExperimentConfig, ExperimentReport

logger = logging.getLogger(__name__)

router = typer.Typer()


def load_experiment(service, path: Path) -> ExperimentConfig:
    payload = service.store.read_json(path)
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ParameterError(f"invalid experiment config {path}: {e.error_count()} errors\n{e}") from e


def summary_table(report: ExperimentReport) -> Table:
    table = Table(title="misclassification rate over realizations")
    for column in ("method", "param", "median", "lower quartile", "upper quartile", "runs"):
        table.add_column(column)
    for s in report.summaries:
        fmt = (lambda v: "-" if v is None else f"{v:.4f}")
        table.add_row(s.method, f"{s.param:g}", fmt(s.median), fmt(s.lower_quartile),
                      fmt(s.upper_quartile), str(s.runs))
    return table


@router.command("bench")
def bench(
    config: Path = typer.Option(..., "--config", help="experiment description (JSON)"),
    out: Optional[Path] = typer.Option(None, "--out", help="output directory; defaults to output_dir of the config"),
    workers: Optional[int] = typer.Option(None, "--workers", help="process pool size"),
):
    """
    运行基准实验: realization sweeps, scoring and artifact emission.
    """
    try:
        service = get_evaluation_service()
        cfg = load_experiment(service, config)
        report = service.run_experiment(cfg, out_dir=out, workers=workers)
        Console(stderr=True).print(summary_table(report))
    except Exception as e:
        handle_exception(e)
