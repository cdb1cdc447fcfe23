# fracseg/core/regression.py
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import numpy.typing as npt

from fracseg.core.multiscale import LeaderStack
from fracseg.exceptions import ParameterError, ShapeMismatchError
from fracseg.gridio.base import Field2D, LabelMask, as_field

logger = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-12


@dataclass(frozen=True)
class RegressionWeights:
    """Slope weights w(j), j = j1..j2, with sum w = 0 and sum j w = 1."""
    j1: int
    j2: int
    w: npt.NDArray[np.float64]

    @property
    def scales(self) -> npt.NDArray[np.float64]:
        return np.arange(self.j1, self.j2 + 1, dtype=np.float64)

    @property
    def count(self) -> int:
        return self.j2 - self.j1 + 1

    def constraint_residuals(self) -> tuple[float, float]:
        return float(abs(self.w.sum())), float(abs(self.scales @ self.w - 1.0))


def ols_weights(j1: int, j2: int) -> RegressionWeights:
    """Ordinary least-squares slope weights over scales j1..j2."""
    if j1 < 1 or j2 <= j1:
        raise ParameterError(f"slope needs at least two scales, got ({j1}, {j2})")
    j = np.arange(j1, j2 + 1, dtype=np.float64)
    s0, s1, s2 = float(j.size), j.sum(), (j ** 2).sum()
    w = (s0 * j - s1) / (s0 * s2 - s1 ** 2)
    return RegressionWeights(j1=j1, j2=j2, w=w)


def estimate_h(stack: LeaderStack, w: RegressionWeights) -> Field2D:
    """Pointwise regression of log2-leaders on scale, minus gamma."""
    if (stack.j1, stack.j2) != (w.j1, w.j2):
        raise ShapeMismatchError(
            f"leader scales ({stack.j1}, {stack.j2}) differ from weight scales ({w.j1}, {w.j2})")
    return np.tensordot(w.w, stack.log_leaders, axes=1) - stack.gamma


def _periodic_kernel(n: int, sigma: float) -> np.ndarray:
    radius = int(math.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    g /= g.sum()
    folded = np.zeros(n)
    # taps beyond the grid length wrap onto the same bins
    np.add.at(folded, np.mod(np.arange(-radius, radius + 1), n), g)
    return folded


def gaussian_smooth(h, sigma: float) -> Field2D:
    """
    Circular convolution with a normalised Gaussian of std ``sigma`` pixels,
    truncated at radius ceil(4 sigma). Separable: rows then columns.
    """
    if not sigma > 0:
        raise ParameterError(f"smoothing sigma must be > 0, got {sigma}")
    h = as_field(h, name="h map")
    rows, cols = h.shape
    k_rows = np.fft.rfft(_periodic_kernel(rows, sigma))
    k_cols = np.fft.rfft(_periodic_kernel(cols, sigma))
    out = np.fft.irfft(np.fft.rfft(h, axis=0) * k_rows[:, None], n=rows, axis=0)
    out = np.fft.irfft(np.fft.rfft(out, axis=1) * k_cols[None, :], n=cols, axis=1)
    return out


def region_average_reestimate(
    stack: LeaderStack, mask: LabelMask, w: RegressionWeights
) -> List[Optional[float]]:
    """
    One regularity per mask label: the regression of the within-region mean
    log2-leader at each scale. Labels with no pixels give None.
    """
    if mask.shape != stack.grid_shape:
        raise ShapeMismatchError(f"mask shape {mask.shape} differs from leader grid {stack.grid_shape}")
    if (stack.j1, stack.j2) != (w.j1, w.j2):
        raise ShapeMismatchError("leader and weight scale ranges differ")
    out: List[Optional[float]] = []
    for q in range(mask.q):
        region = mask.region(q)
        if not region.any():
            logger.warning(f"region {q} is empty; no regularity re-estimate")
            out.append(None)
            continue
        means = stack.log_leaders[:, region].mean(axis=1)
        out.append(float(w.w @ means - stack.gamma))
    return out
