# fracseg/core/multiscale.py
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt
import pywt
from scipy.ndimage import maximum_filter

from fracseg.exceptions import ParameterError, ShapeMismatchError
from fracseg.gridio.base import Field2D, as_field

logger = logging.getLogger(__name__)

ORIENTATIONS = 3
LEADER_FLOOR = 1e-300


@dataclass(frozen=True)
class WaveletPyramid:
    """
    L1-normalised 2D DWT: details[j-1] has shape (3, N/2^j, N/2^j) for
    orientations m = 1, 2, 3; approx is the m = 0 grid at the coarsest scale.
    """
    details: list[npt.NDArray[np.float64]]
    approx: npt.NDArray[np.float64]
    wavelet: str
    normalization: str = "L1"

    @property
    def levels(self) -> int:
        return len(self.details)

    def l2_energy(self) -> float:
        """Sum of squared orthonormal coefficients (undoing the 2^-j factors)."""
        energy = float(np.sum((self.approx * 2.0 ** self.levels) ** 2))
        for j, d in enumerate(self.details, start=1):
            energy += float(np.sum((d * 2.0 ** j) ** 2))
        return energy


@dataclass(frozen=True)
class LeaderStack:
    """log2-leaders for scales j1..j2, each upsampled to the scale-1 grid: shape (J, N/2, N/2)."""
    j1: int
    j2: int
    gamma: float
    log_leaders: npt.NDArray[np.float64]

    @property
    def scales(self) -> npt.NDArray[np.int64]:
        return np.arange(self.j1, self.j2 + 1)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.log_leaders.shape[1:]


def dwt2(f, levels: int, wavelet: str = "db2") -> WaveletPyramid:
    """
    Separable Mallat pyramid with periodic extension; level-j orthonormal
    coefficients are multiplied by 2^-j (L1 normalisation).
    """
    f = as_field(f, name="image")
    rows, cols = f.shape
    if levels < 1:
        raise ParameterError(f"levels must be >= 1, got {levels}")
    if 2 ** levels > min(rows, cols):
        raise ParameterError(f"levels={levels} exceeds log2 of the image size {f.shape}")
    if rows % 2 ** levels or cols % 2 ** levels:
        raise ParameterError(f"image size {f.shape} is not divisible by 2^{levels}")
    try:
        w = pywt.Wavelet(wavelet)
    except ValueError as e:
        raise ParameterError(f"unknown wavelet {wavelet!r}") from e
    if not w.orthogonal or w.vanishing_moments_psi is None or w.vanishing_moments_psi < 1:
        raise ParameterError(f"wavelet {wavelet!r} must be orthogonal with at least one vanishing moment")

    coeffs = pywt.wavedec2(f, w, mode="periodization", level=levels)
    details = []
    # wavedec2 orders details coarsest first
    for j in range(1, levels + 1):
        c_h, c_v, c_d = coeffs[levels - j + 1]
        details.append(np.stack([c_h, c_v, c_d]) * 2.0 ** (-j))
    approx = coeffs[0] * 2.0 ** (-levels)
    return WaveletPyramid(details=details, approx=approx, wavelet=wavelet)


def leaders(
    p: WaveletPyramid,
    j_range: tuple[int, int],
    gamma: float = 1.0,
    placement: Literal["per_coefficient", "outer"] = "per_coefficient",
    floor: float = LEADER_FLOOR,
) -> LeaderStack:
    """
    Wavelet leaders: at (j, k), the sup of 2^{j' gamma}|Y^(m)(j', k')| over
    m = 1..3, j' <= j and dyadic cubes inside the 3x3 neighbourhood of
    lambda_{j,k} (periodic wrap). Each scale is upsampled to the scale-1 grid
    by index replication, floored and passed through log2.

    ``placement="outer"`` applies 2^{j gamma} to the leader instead of each
    contributing coefficient.
    """
    j1, j2 = j_range
    if not 1 <= j1 <= j2:
        raise ParameterError(f"invalid scale range ({j1}, {j2})")
    if j2 > p.levels:
        raise ParameterError(f"j2={j2} exceeds the pyramid depth {p.levels}")
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    if placement not in ("per_coefficient", "outer"):
        raise ParameterError(f"unknown gamma placement {placement!r}")

    base_shape = p.details[0].shape[1:]
    stack = []
    below = None
    for j in range(1, j2 + 1):
        mag = np.abs(p.details[j - 1]).max(axis=0)
        if placement == "per_coefficient":
            mag = mag * 2.0 ** (j * gamma)
        if below is not None:
            r, c = mag.shape
            # sup over the 2x2 children, which already hold every finer scale
            mag = np.maximum(mag, below.reshape(r, 2, c, 2).max(axis=(1, 3)))
        below = mag
        if j < j1:
            continue
        lead = maximum_filter(mag, size=3, mode="wrap")
        if placement == "outer":
            lead = lead * 2.0 ** (j * gamma)
        rep = 2 ** (j - 1)
        lead = np.repeat(np.repeat(lead, rep, axis=0), rep, axis=1)
        if lead.shape != base_shape:
            raise ShapeMismatchError(f"upsampled scale {j} has shape {lead.shape}, expected {base_shape}")
        stack.append(lead)

    stack = np.stack(stack)
    floored = stack < floor
    if floored.all():
        logger.warning("all wavelet leaders vanish (constant image?); floor applied everywhere")
    elif floored.any():
        logger.debug(f"floor applied to {int(floored.sum())} leader values")
    return LeaderStack(j1=j1, j2=j2, gamma=float(gamma), log_leaders=np.log2(np.maximum(stack, floor)))


def compute_leader_stack(
    f,
    j_range: tuple[int, int],
    gamma: float = 1.0,
    wavelet: str = "db2",
    placement: Literal["per_coefficient", "outer"] = "per_coefficient",
    floor: float = LEADER_FLOOR,
) -> LeaderStack:
    """dwt2 followed by leaders, using exactly j2 decomposition levels."""
    return leaders(dwt2(f, j_range[1], wavelet), j_range, gamma, placement, floor)
