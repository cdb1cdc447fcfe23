# fracseg/core/synthesis.py
"""
Gaussian random fields with prescribed piecewise-constant regularity.

Fields are drawn by spectral (circulant) synthesis: complex white noise on
the N x N frequency grid, amplitude |xi|^-(h+1) (power spectrum
|xi|^-2(h+1)), zero DC, inverse FFT, real part, standardisation.

Random numbers: PCG64 seeded with the 64-bit seed; Gaussian variates by
inverse CDF (scipy.special.ndtri) of uniforms on the open interval (0, 1).
"""
import logging

import numpy as np
from scipy.special import ndtri

from fracseg.exceptions import GeometryError, ParameterError, ShapeMismatchError
from fracseg.gridio.base import Field2D, LabelMask
from fracseg.gridio.pgm import read_mask
from fracseg.schemas.synthesis_schemas import MaskSpec, ShapeSpec, SynthConfig

logger = logging.getLogger(__name__)


def ellipse_mask_spec(n: int) -> MaskSpec:
    """Two-region benchmark: centred ellipse (label 1) on background (label 0)."""
    return MaskSpec(size=n, shapes=[ShapeSpec(kind="ellipse", params=[n / 2, n / 2, 0.3 * n, 0.25 * n])])


def three_region_mask_spec(n: int) -> MaskSpec:
    """Three-region benchmark with corners: a square (label 1) partly covered by a disc (label 2)."""
    return MaskSpec(size=n, shapes=[
        ShapeSpec(kind="rectangle", params=[n / 8, n / 8, 5 * n / 8, 5 * n / 8]),
        ShapeSpec(kind="ellipse", params=[0.65 * n, 0.65 * n, 0.25 * n, 0.25 * n]),
    ])


def _check_shape_in_grid(shape: ShapeSpec, n: int) -> None:
    if shape.kind == "ellipse":
        c1, c2, a, b = shape.params
        if a <= 0 or b <= 0:
            raise GeometryError(f"ellipse semi-axes must be positive, got a={a}, b={b}")
        if c1 - a < -0.5 or c1 + a > n - 0.5 or c2 - b < -0.5 or c2 + b > n - 0.5:
            raise GeometryError(f"ellipse {shape.params} extends outside the {n}x{n} grid")
    else:
        r0, c0, r1, c1 = shape.params
        if not (0 <= r0 < r1 <= n and 0 <= c0 < c1 <= n):
            raise GeometryError(f"rectangle {shape.params} is empty or outside the {n}x{n} grid")


def make_mask(spec: MaskSpec) -> LabelMask:
    """Rasterises the mask geometry; pixel (k1, k2) gets the label of the last shape containing it."""
    n = spec.size
    if spec.mask_file is not None:
        mask = read_mask(spec.mask_file)
        if mask.shape != (n, n):
            raise ShapeMismatchError(f"custom mask {spec.mask_file} is {mask.shape}, expected {(n, n)}")
        return mask
    k1, k2 = np.meshgrid(np.arange(n, dtype=np.float64), np.arange(n, dtype=np.float64), indexing="ij")
    labels = np.zeros((n, n), dtype=np.int64)
    for i, shape in enumerate(spec.shapes):
        _check_shape_in_grid(shape, n)
        label = shape.label if shape.label is not None else i + 1
        if shape.kind == "ellipse":
            c1, c2, a, b = shape.params
            inside = ((k1 - c1) / a) ** 2 + ((k2 - c2) / b) ** 2 <= 1.0
        else:
            r0, c0, r1, c1 = shape.params
            inside = (k1 >= r0) & (k1 < r1) & (k2 >= c0) & (k2 < c1)
        labels[inside] = label
    return LabelMask(labels, spec.class_count())


def _frequency_noise(n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    tiny = np.finfo(np.float64).tiny
    u = np.clip(rng.random((2, n, n)), tiny, 1.0 - np.finfo(np.float64).epsneg)
    g = ndtri(u)
    return g[0] + 1j * g[1]


def _shape_noise(noise: np.ndarray, h: float) -> Field2D:
    n = noise.shape[0]
    freqs = np.fft.fftfreq(n)
    radius = np.hypot(freqs[:, None], freqs[None, :])
    radius[0, 0] = 1.0
    amplitude = radius ** (-(h + 1.0))
    amplitude[0, 0] = 0.0
    field = np.fft.ifft2(noise * amplitude).real
    field -= field.mean()
    field /= field.std()
    return field


def _check_h(h: float) -> None:
    if not 0.0 < h < 1.0:
        raise ParameterError(f"regularity h must lie in (0, 1), got {h}")


def synth_homogeneous(n: int, h: float, seed: int) -> Field2D:
    """One realisation of an isotropic field of regularity h, zero mean and unit variance."""
    _check_h(h)
    if n < 2:
        raise ParameterError(f"size must be at least 2, got {n}")
    return _shape_noise(_frequency_noise(n, seed), h)


def synth_piecewise(cfg: SynthConfig) -> tuple[Field2D, LabelMask]:
    """
    Composes homogeneous fields that share one white-noise draw: each pixel takes
    the value of the unit-variance field whose h matches its mask label.
    """
    for h in cfg.h_values:
        _check_h(h)
    mask = make_mask(cfg.mask)
    if mask.q != len(cfg.h_values):
        raise ParameterError(f"mask has Q={mask.q} classes but {len(cfg.h_values)} regularity values were given")
    noise = _frequency_noise(cfg.size, cfg.seed)
    fields = {h: _shape_noise(noise, h) for h in sorted(set(cfg.h_values))}
    out = np.empty((cfg.size, cfg.size), dtype=np.float64)
    for label, h in enumerate(cfg.h_values):
        region = mask.labels == label
        out[region] = fields[h][region]
    logger.info(f"synthesised {cfg.size}x{cfg.size} field, h={cfg.h_values}, seed={cfg.seed}")
    return out, mask
