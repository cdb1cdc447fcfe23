from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class ShapeSpec(BaseModel):
    """
    One shape of a benchmark mask, in pixel units.
    ellipse: params = (c1, c2, a, b), row/column centre and semi-axes.
    rectangle: params = (r0, c0, r1, c1), half-open row/column ranges.
    """
    kind: Literal["ellipse", "rectangle"] = Field(..., description="shape kind")
    params: List[float] = Field(..., min_length=4, max_length=4, description="geometry parameters")
    label: Optional[int] = Field(None, ge=1, description="label painted inside; defaults to position + 1")


class MaskSpec(BaseModel):
    """
    Ground-truth mask geometry on an N x N grid.
    Shapes are painted in order, later shapes overwrite earlier ones; outside
    every shape the label is 0. ``mask_file`` replaces the shape list by a PGM mask.
    """
    size: int = Field(..., ge=1, description="grid size N")
    shapes: List[ShapeSpec] = Field(default_factory=list)
    mask_file: Optional[str] = Field(None, description="custom mask PGM path")

    def class_count(self) -> Optional[int]:
        """Q implied by the shape list (None for custom mask files)."""
        if self.mask_file is not None:
            return None
        labels = [s.label if s.label is not None else i + 1 for i, s in enumerate(self.shapes)]
        return max(labels, default=0) + 1

    @classmethod
    def from_cli(cls, text: str, size: int) -> "MaskSpec":
        """
        Parses ``ellipse:c1,c2,a,b``, ``rect:r0,c0,r1,c1`` (several joined by ';'),
        ``preset:ellipse``, ``preset:three`` or ``file:<path>``.
        """
        text = text.strip()
        if text.startswith("preset:"):
            # Imported here: core.synthesis imports this module.
            from fracseg.core.synthesis import ellipse_mask_spec, three_region_mask_spec
            name = text.split(":", 1)[1]
            presets = {"ellipse": ellipse_mask_spec, "three": three_region_mask_spec}
            if name not in presets:
                raise ValueError(f"unknown geometry preset {name!r}; expected one of {sorted(presets)}")
            return presets[name](size)
        if text.startswith("file:"):
            return cls(size=size, mask_file=text.split(":", 1)[1])
        shapes = []
        for part in filter(None, (p.strip() for p in text.split(";"))):
            kind, _, values = part.partition(":")
            kind = {"rect": "rectangle", "rectangle": "rectangle", "ellipse": "ellipse"}.get(kind)
            if kind is None:
                raise ValueError(f"unknown shape in geometry {part!r}")
            shapes.append(ShapeSpec(kind=kind, params=[float(v) for v in values.split(",")]))
        return cls(size=size, shapes=shapes)


class SynthConfig(BaseModel):
    """
    Piecewise-constant regularity synthesis: label q of the mask gets h_values[q].
    """
    size: int = Field(..., ge=32, description="grid size N, a power of two")
    h_values: List[float] = Field(..., min_length=1, description="regularity per label")
    seed: int = Field(0, ge=0, lt=2**64, description="64-bit generator seed")
    mask: MaskSpec

    @field_validator("size")
    def validate_size(cls, v):
        if v & (v - 1):
            raise ValueError(f"size must be a power of two, got {v}")
        return v

    @field_validator("h_values")
    def validate_h_values(cls, v):
        for h in v:
            if not 0.0 < h < 1.0:
                raise ValueError(f"regularity values must lie in (0, 1), got {h}")
        return v

    @model_validator(mode="after")
    def check_mask_consistency(self):
        if self.mask.size != self.size:
            raise ValueError(f"mask size {self.mask.size} differs from synthesis size {self.size}")
        q = self.mask.class_count()
        if q is not None and q != len(self.h_values):
            raise ValueError(f"mask has {q} classes but {len(self.h_values)} regularity values were given")
        return self
