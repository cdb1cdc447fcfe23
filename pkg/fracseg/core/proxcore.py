# fracseg/core/proxcore.py
"""
Discrete gradient, TV seminorm and the closed-form proximity operators and
projections shared by the primal-dual solvers.

Gradient convention (0-based): for h of shape (N1, N2) the differences live
on the (N1-1) x (N2-1) interior grid,

    g1[i, j] = h[i+1, j+1] - h[i+1, j]
    g2[i, j] = h[i+1, j+1] - h[i, j+1]

Per-pixel vectors (weights, regression residuals) are stacked on axis 0.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import numpy.typing as npt

from fracseg.exceptions import ParameterError, ShapeMismatchError
from fracseg.gridio.base import Field2D

logger = logging.getLogger(__name__)

GRAD_NORM_SQ_BOUND = 8.0

GradPair = Tuple[Field2D, Field2D]


def grad(h: Field2D) -> GradPair:
    if h.ndim != 2 or min(h.shape) < 2:
        raise ShapeMismatchError(f"gradient needs a grid of at least 2x2, got {h.shape}")
    g1 = h[1:, 1:] - h[1:, :-1]
    g2 = h[1:, 1:] - h[:-1, 1:]
    return g1, g2


def grad_adjoint(p: GradPair) -> Field2D:
    """Exact adjoint of grad: <grad(h), p> = <h, grad_adjoint(p)>."""
    p1, p2 = p
    if p1.shape != p2.shape:
        raise ShapeMismatchError(f"dual components differ in shape: {p1.shape} vs {p2.shape}")
    rows, cols = p1.shape
    out = np.zeros((rows + 1, cols + 1), dtype=np.result_type(p1, p2, np.float64))
    out[1:, 1:] += p1 + p2
    out[1:, :-1] -= p1
    out[:-1, 1:] -= p2
    return out


def tv(h: Field2D) -> float:
    """Isotropic total variation over the interior grid."""
    g1, g2 = grad(h)
    return float(np.sqrt(g1 ** 2 + g2 ** 2).sum())


def grad_norm_sq(shape: tuple[int, int], iterations: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of ||grad||^2 on grids of the given shape."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    value = 0.0
    for _ in range(iterations):
        y = grad_adjoint(grad(x))
        value = float(np.linalg.norm(y))
        if value == 0.0:
            return 0.0
        x = y / value
    return value


def prox_l21(u: GradPair, t) -> GradPair:
    """Block soft-thresholding of every 2-vector (u1, u2) at threshold t."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError(f"threshold must be >= 0, got {t}")
    u1, u2 = u
    norm = np.sqrt(u1 ** 2 + u2 ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > t, 1.0 - t / np.where(norm > 0, norm, 1.0), 0.0)
    return u1 * scale, u2 * scale


def project_disc(u: GradPair, radius) -> GradPair:
    """Projection of every 2-vector onto the disc of the given radius; prox of the conjugate of radius*||.||_{2,1}."""
    u1, u2 = u
    norm = np.sqrt(u1 ** 2 + u2 ** 2)
    scale = np.minimum(1.0, radius / np.maximum(norm, np.finfo(np.float64).tiny))
    return u1 * scale, u2 * scale


@dataclass(frozen=True)
class HyperplaneSpec:
    """The hyperplane {w : <a, w> = b}."""
    a: npt.NDArray[np.float64]
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        if a.ndim != 1 or not np.any(a):
            raise ParameterError("hyperplane normal must be a non-zero vector")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def zero_sum(cls, j1: int, j2: int) -> "HyperplaneSpec":
        return cls(a=np.ones(j2 - j1 + 1), b=0.0)

    @classmethod
    def unit_slope(cls, j1: int, j2: int) -> "HyperplaneSpec":
        return cls(a=np.arange(j1, j2 + 1, dtype=np.float64), b=1.0)

    @property
    def dim(self) -> int:
        return self.a.size


def _check_dim(u: np.ndarray, spec: HyperplaneSpec) -> None:
    if u.shape[0] != spec.dim:
        raise ShapeMismatchError(f"vector length {u.shape[0]} differs from hyperplane dimension {spec.dim}")


def _a_column(spec: HyperplaneSpec, ndim: int) -> np.ndarray:
    return spec.a.reshape((-1,) + (1,) * (ndim - 1))


def project_hyperplane(u, spec: HyperplaneSpec) -> np.ndarray:
    """u + (b - <a,u>) a / ||a||^2; u may carry extra trailing pixel axes."""
    u = np.asarray(u, dtype=np.float64)
    _check_dim(u, spec)
    a = _a_column(spec, u.ndim)
    gap = (spec.b - np.tensordot(spec.a, u, axes=1)) / (spec.a @ spec.a)
    return u + a * gap


def distance_to_hyperplane(u, spec: HyperplaneSpec) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    _check_dim(u, spec)
    return np.abs(np.tensordot(spec.a, u, axes=1) - spec.b) / np.linalg.norm(spec.a)


def prox_dist(u, spec: HyperplaneSpec, eta: float) -> np.ndarray:
    """
    Proximity operator of eta * d_C for the hyperplane C: the projection when
    d_C(u) <= eta, otherwise a step of length eta towards it.
    """
    if eta < 0:
        raise ParameterError(f"eta must be >= 0, got {eta}")
    u = np.asarray(u, dtype=np.float64)
    p = project_hyperplane(u, spec)
    d = distance_to_hyperplane(u, spec)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(d <= eta, 1.0, eta / np.where(d > 0, d, 1.0))
    return u + step * (p - u)


def project_ordered_pair(u1, u2) -> Tuple[np.ndarray, np.ndarray]:
    """Projection onto {u1 >= u2}: violating pairs are replaced by their mean."""
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    if u1.shape != u2.shape:
        raise ShapeMismatchError(f"ordered pair shapes differ: {u1.shape} vs {u2.shape}")
    bad = u1 < u2
    mean = 0.5 * (u1 + u2)
    return np.where(bad, mean, u1), np.where(bad, mean, u2)


def project_box01(u) -> np.ndarray:
    return np.clip(u, 0.0, 1.0)
