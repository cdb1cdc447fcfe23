# fracseg/routers/leaders.py
from pathlib import Path
from typing import Optional

import typer

from fracseg.dependencies import get_segmentation_service
from fracseg.exceptions import ParameterError, handle_exception

router = typer.Typer()


@router.command("leaders")
def leaders(
    in_path: Path = typer.Option(..., "--in", help="input field (F2D) or grayscale image (PGM)"),
    out: Path = typer.Option(..., "--out", help="output leader stack (F2DS)"),
    j1: Optional[int] = typer.Option(None, "--j1", help="finest scale"),
    j2: Optional[int] = typer.Option(None, "--j2", help="coarsest scale"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="fractional integration parameter"),
    wavelet: Optional[str] = typer.Option(None, "--wavelet", help="Daubechies wavelet, e.g. db2"),
):
    """
    计算小波领袖 log2-leaders for scales j1..j2.
    """
    try:
        try:
            service = get_segmentation_service().with_overrides(J1=j1, J2=j2, GAMMA=gamma, WAVELET=wavelet)
        except ValueError as e:
            raise ParameterError(str(e)) from e
        stack = service.leaders_to(in_path, out)
        typer.echo(f"wrote {out} (scales {stack.j1}..{stack.j2}, grid {stack.grid_shape})")
    except Exception as e:
        handle_exception(e)
