# fracseg/gridio/base.py
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np
import numpy.typing as npt

from fracseg.exceptions import NonFiniteError, ParameterError, ShapeMismatchError, UnsupportedError

# A Field2D is a 2-D float64 array; images and regularity maps share the type.
Field2D: TypeAlias = npt.NDArray[np.float64]

MAX_MASK_CLASSES = 256


def as_field(data, name: str = "field") -> Field2D:
    """
    Validates and converts array-like input to a Field2D.

    Raises:
        ShapeMismatchError: if the input is not two-dimensional or is empty.
        NonFiniteError: if any value is NaN or infinite.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatchError(f"{name} must be a non-empty 2-D grid, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf values")
    return arr


@dataclass(frozen=True)
class LabelMask:
    """Integer region labels in [0, q-1] on a rows x cols grid."""
    labels: npt.NDArray[np.int64]
    q: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ShapeMismatchError(f"mask labels must be a non-empty 2-D grid, got shape {labels.shape}")
        if self.q < 1:
            raise ParameterError(f"class count must be >= 1, got {self.q}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ParameterError("mask labels must be integers")
        labels = labels.astype(np.int64)
        if labels.min() < 0 or labels.max() >= self.q:
            raise ParameterError(f"mask labels must lie in [0, {self.q - 1}]")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def __eq__(self, other):
        if not isinstance(other, LabelMask):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def present_labels(self) -> list[int]:
        return [int(v) for v in np.unique(self.labels)]

    def region(self, label: int) -> npt.NDArray[np.bool_]:
        return self.labels == label


def check_mask_supported(mask: LabelMask) -> None:
    if mask.q > MAX_MASK_CLASSES:
        raise UnsupportedError(f"masks support at most {MAX_MASK_CLASSES} classes, got Q={mask.q}")


def decimate_mask(mask: LabelMask, factor: int = 2) -> LabelMask:
    """Samples pixel factor*k, matching estimation locations x = 2k of the finest scale."""
    if factor < 1:
        raise ParameterError(f"decimation factor must be >= 1, got {factor}")
    return LabelMask(mask.labels[::factor, ::factor].copy(), mask.q)


def check_same_shape(*arrays, names=None) -> None:
    shapes = [np.shape(a) for a in arrays]
    if len(set(shapes)) > 1:
        label = ", ".join(names) if names else "inputs"
        raise ShapeMismatchError(f"{label} must share one shape, got {shapes}")
