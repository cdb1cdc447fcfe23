# fracseg/routers/estimate.py
from pathlib import Path
from typing import Optional

import typer

from fracseg.dependencies import get_segmentation_service
from fracseg.exceptions import handle_exception

router = typer.Typer()


@router.command("estimate")
def estimate(
    in_path: Path = typer.Option(..., "--in", help="leader stack (F2DS)"),
    out: Path = typer.Option(..., "--out", help="output regularity map (F2D)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="must match the gamma of the leaders"),
    smooth: Optional[float] = typer.Option(None, "--smooth", help="Gaussian smoothing std in pixels"),
):
    """
    逐点 Hölder 指数估计 (pointwise regularity by linear regression across scales).
    """
    try:
        hhat = get_segmentation_service().estimate_to(in_path, out, gamma=gamma, smooth_sigma=smooth)
        typer.echo(f"wrote {out} (mean h = {float(hhat.mean()):.4f})")
    except Exception as e:
        handle_exception(e)
