from fracseg.gridio.base import Field2D, LabelMask, as_field, decimate_mask
from fracseg.gridio.f2d import read_field, read_stack, write_field, write_stack
from fracseg.gridio.pgm import export_grayscale, import_grayscale, read_mask, write_mask

__all__ = [
    "Field2D",
    "LabelMask",
    "as_field",
    "decimate_mask",
    "read_field",
    "write_field",
    "read_stack",
    "write_stack",
    "read_mask",
    "write_mask",
    "import_grayscale",
    "export_grayscale",
]
