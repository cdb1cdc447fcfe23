# fracseg/routers/segment.py
from enum import Enum
from pathlib import Path
from typing import Optional

import typer

from fracseg.dependencies import get_segmentation_service
from fracseg.exceptions import ParameterError, handle_exception
from fracseg.schemas.experiment_schemas import Method

router = typer.Typer()


class MethodChoice(str, Enum):
    smooth = "smooth"
    tv = "tv"
    tvw = "tvw"
    rms = "rms"


def resolve_param(method: Method, lam: Optional[float], sigma_smooth: Optional[float]) -> float:
    if method == "smooth":
        if sigma_smooth is None:
            raise ParameterError("--sigma-smooth is required for the smooth method")
        return sigma_smooth
    if lam is None:
        raise ParameterError(f"--lambda is required for the {method} method")
    return lam


@router.command("segment")
def segment(
    method: MethodChoice = typer.Option(..., "--method", help="smooth | tv | tvw | rms"),
    in_path: Path = typer.Option(..., "--in", help="input field (F2D) or grayscale image (PGM)"),
    q: int = typer.Option(2, "--q", help="class count Q"),
    out: Path = typer.Option(..., "--out", help="output mask (PGM)"),
    lam: Optional[float] = typer.Option(None, "--lambda", help="TV weight (tv, tvw, rms)"),
    eta: float = typer.Option(1000.0, "--eta", help="constraint penalty eta1 = eta2 (tvw)"),
    sigma_smooth: Optional[float] = typer.Option(None, "--sigma-smooth", help="smoothing std in pixels (smooth)"),
    hout: Optional[Path] = typer.Option(None, "--hout", help="output regularity map (F2D)"),
    report: Optional[Path] = typer.Option(None, "--report", help="run report (JSON)"),
):
    """
    分割纹理图像 into Q regions of constant regularity.
    """
    try:
        method = method.value
        param = resolve_param(method, lam, sigma_smooth)
        outcome = get_segmentation_service().segment_to(
            in_path, method, param, q, out, h_path=hout, report_path=report, eta1=eta, eta2=eta)
        typer.echo(f"wrote {out} ({method}, param={param:g}, Q={q}, {outcome.report.seconds:.2f}s, "
                   f"converged={outcome.report.converged})")
    except Exception as e:
        handle_exception(e)
