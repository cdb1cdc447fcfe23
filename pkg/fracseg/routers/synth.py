# fracseg/routers/synth.py
import logging
from pathlib import Path
from typing import Optional

import typer

from fracseg.dependencies import get_segmentation_service
from fracseg.exceptions import ParameterError, handle_exception
from fracseg.schemas.synthesis_schemas import MaskSpec, SynthConfig

logger = logging.getLogger(__name__)

router = typer.Typer()


def parse_h_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ParameterError(f"cannot parse regularity list {text!r}") from e


@router.command("synth")
def synth(
    size: int = typer.Option(512, "--size", help="grid size N (power of two)"),
    h: str = typer.Option(..., "--h", help="comma-separated regularity per label, e.g. 0.5,0.7"),
    geometry: str = typer.Option("preset:ellipse", "--geometry",
                                 help="ellipse:c1,c2,a,b / rect:r0,c0,r1,c1 joined by ';', preset:ellipse|three, file:mask.pgm"),
    seed: int = typer.Option(0, "--seed", help="64-bit generator seed"),
    out: Path = typer.Option(..., "--out", help="output field (F2D)"),
    mask_out: Optional[Path] = typer.Option(None, "--mask-out", help="ground-truth mask (PGM)"),
    preview: Optional[Path] = typer.Option(None, "--preview", help="min-max scaled PGM preview"),
):
    """
    合成分段恒定正则性的纹理场 (piecewise-regularity texture).
    """
    try:
        h_values = parse_h_values(h)
        try:
            cfg = SynthConfig(size=size, h_values=h_values, seed=seed, mask=MaskSpec.from_cli(geometry, size))
        except ValueError as e:
            raise ParameterError(str(e)) from e
        service = get_segmentation_service()
        field, mask = service.synthesize_to(cfg, out, mask_out, preview)
        typer.echo(f"wrote {out} ({field.shape[0]}x{field.shape[1]}, Q={mask.q})")
    except Exception as e:
        handle_exception(e)
