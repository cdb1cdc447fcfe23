# fracseg/routers/sweep.py
from pathlib import Path
from typing import Optional

import typer

from fracseg.dependencies import get_evaluation_service
from fracseg.exceptions import ParameterError, handle_exception
from fracseg.routers.bench import load_experiment
from fracseg.services.evaluation_service import is_non_increasing

router = typer.Typer()


@router.command("sweep-dh")
def sweep_dh(
    config: Path = typer.Option(..., "--config", help="two-region experiment description (JSON)"),
    h1: float = typer.Option(0.5, "--h1", help="regularity of the background"),
    deltas: str = typer.Option("0.1,0.2,0.3,0.4", "--deltas", help="comma-separated regularity gaps"),
    out: Optional[Path] = typer.Option(None, "--out", help="output directory"),
):
    """
    正则性差异扫描: best-parameter median error as a function of the gap h2 - h1.
    """
    try:
        try:
            gaps = [float(d) for d in deltas.split(",") if d.strip()]
        except ValueError as e:
            raise ParameterError(f"cannot parse gap list {deltas!r}") from e
        service = get_evaluation_service()
        cfg = load_experiment(service, config)
        sweep = service.run_delta_h_sweep(cfg, h1, gaps, out_dir=out)
        for method, rates in sweep.items():
            shown = ", ".join("-" if r is None else f"{r:.4f}" for r in rates)
            ok = all(r is not None for r in rates) and is_non_increasing(rates)
            typer.echo(f"{method}: {shown}{'' if ok else '  (not monotone)'}")
    except Exception as e:
        handle_exception(e)
