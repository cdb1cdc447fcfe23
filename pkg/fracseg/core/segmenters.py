# fracseg/core/segmenters.py
"""
Segmentation solvers on regularity maps:

- ``tv_denoise``: ROF denoising by accelerated forward-backward on the dual.
- ``tvw_joint``: joint TV estimation of h and per-pixel regression weights
  (primal-dual forward-backward, soft constraints on the weights).
- ``potts_segment``: convex relaxation of the Potts model with Gaussian
  costs, alternated with re-estimation of the class means.
- ``threshold_histogram``: labels from the minima of a smoothed histogram.

``tv_denoise`` stops on the relative duality gap, the other solvers on
relative iterate change (sup norm); all of them also stop at an iteration
limit. Non-convergence is reported on the result, never raised.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import numpy.typing as npt
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks
from skimage.filters import threshold_multiotsu

from fracseg.core.multiscale import LeaderStack
from fracseg.core.proxcore import (
    GRAD_NORM_SQ_BOUND,
    HyperplaneSpec,
    distance_to_hyperplane,
    grad,
    grad_adjoint,
    project_box01,
    project_disc,
    project_ordered_pair,
    prox_dist,
    tv,
)
from fracseg.core.regression import RegressionWeights, ols_weights
from fracseg.exceptions import DivergenceError, ParameterError, ShapeMismatchError
from fracseg.gridio.base import Field2D, LabelMask, as_field
from fracseg.schemas.solver_schemas import HistogramConfig, SolverConfig

logger = logging.getLogger(__name__)


def _rel_change(new: list, old: list) -> float:
    diff = max(float(np.max(np.abs(a - b))) for a, b in zip(new, old))
    scale = max(float(np.max(np.abs(a))) for a in new)
    return diff / max(scale, 1e-12)


def _check_finite(arrays: list, limit: float, tau: float, sigma: float, what: str) -> None:
    for a in arrays:
        peak = float(np.max(np.abs(a)))
        if not math.isfinite(peak) or peak > limit:
            raise DivergenceError(f"{what} diverged (|iterate| = {peak:.3g})", tau=tau, sigma=sigma)


# ---------------------------------------------------------------- objectives

def tv_objective(h: Field2D, hhat: Field2D, lam: float) -> float:
    return 0.5 * float(np.sum((h - hhat) ** 2)) + lam * tv(h)


def tv_dual_objective(y, hhat: Field2D) -> float:
    """Dual value of ROF for |y| <= lam; lower-bounds tv_objective."""
    r = hhat - grad_adjoint(y)
    return 0.5 * float(np.sum(hhat ** 2)) - 0.5 * float(np.sum(r ** 2))


def tvw_objective(h: Field2D, w: np.ndarray, log_x: np.ndarray, lam: float, eta1: float, eta2: float,
                  c1: Optional[HyperplaneSpec] = None, c2: Optional[HyperplaneSpec] = None) -> float:
    """Joint criterion in slope units: squared regression residual, TV and weighted distances to C1, C2."""
    data = float(np.sum((np.sum(w * log_x, axis=0) - h) ** 2))
    value = data + lam * tv(h)
    if c1 is not None and eta1:
        value += eta1 * float(distance_to_hyperplane(w, c1).sum())
    if c2 is not None and eta2:
        value += eta2 * float(distance_to_hyperplane(w, c2).sum())
    return value


def gaussian_costs(hhat: Field2D, means, variances) -> np.ndarray:
    """ell_q(k) = (hhat(k) - mu_q)^2 / (2 sigma_q^2), stacked on axis 0."""
    means = np.asarray(means, dtype=np.float64)[:, None, None]
    variances = np.asarray(variances, dtype=np.float64)[:, None, None]
    return (hhat[None] - means) ** 2 / (2.0 * variances)


def potts_objective(theta: "ThetaStack", costs: np.ndarray, lam: float) -> float:
    full = theta.full()
    data = float(np.sum((full[:-1] - full[1:]) * costs))
    return data + lam * sum(tv(t) for t in theta.theta)


# ---------------------------------------------------------------- results

@dataclass
class TVResult:
    h: Field2D
    converged: bool
    iterations: int
    residual: float
    dual: tuple = None
    objective_trace: List[float] = field(default_factory=list)


@dataclass
class TVWResult:
    """h in h units (gamma removed); w has shape (J, N1, N2)."""
    h: Field2D
    w: np.ndarray
    converged: bool
    iterations: int
    residual: float
    tau: float
    sigma: float
    constraint_residuals: List[float] = field(default_factory=list)
    objective_trace: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class ThetaStack:
    """theta_1..theta_{Q-1} on axis 0; theta_0 = 1 and theta_Q = 0 are implicit."""
    theta: np.ndarray
    q: int

    def __post_init__(self):
        if self.theta.ndim != 3 or self.theta.shape[0] != self.q - 1:
            raise ShapeMismatchError(f"theta stack of shape {self.theta.shape} does not match Q={self.q}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.theta.shape[1:]

    def full(self) -> np.ndarray:
        ones = np.ones((1,) + self.shape)
        return np.concatenate([ones, self.theta, np.zeros_like(ones)])

    def is_feasible(self, tol: float = 1e-9) -> bool:
        full = self.full()
        return bool(full.min() >= -tol and full.max() <= 1 + tol and np.all(full[:-1] - full[1:] >= -tol))

    @classmethod
    def from_labels(cls, labels: np.ndarray, q: int) -> "ThetaStack":
        """Binary encoding: theta_q(k) = 1 iff label(k) >= q."""
        theta = np.stack([(labels >= p).astype(np.float64) for p in range(1, q)]) if q > 1 \
            else np.zeros((0,) + labels.shape)
        return cls(theta=theta, q=q)


@dataclass
class PottsResult:
    theta: ThetaStack
    means: List[float]
    converged: bool
    iterations: int
    outer_iterations: int
    residual: float
    tau: float = 0.0
    sigma: float = 0.0
    empty_regions: List[int] = field(default_factory=list)
    objective_trace: List[float] = field(default_factory=list)


# ---------------------------------------------------------------- TV denoising

def tv_duality_gap(h: Field2D, y, hhat: Field2D, lam: float) -> tuple[float, float]:
    """
    (primal value, duality gap) for h = hhat - grad*(y) and |y| <= lam.
    The gap lam TV(h) - <y, grad h> bounds the distance of the primal value to the optimum.
    """
    g1, g2 = grad(h)
    total_variation = float(np.sum(np.hypot(g1, g2)))
    primal = 0.5 * float(np.sum((h - hhat) ** 2)) + lam * total_variation
    gap = lam * total_variation - float(np.sum(y[0] * g1 + y[1] * g2))
    return primal, max(gap, 0.0)


def tv_denoise(hhat, lam: float, cfg: SolverConfig, max_iter: Optional[int] = None) -> TVResult:
    """
    argmin_h 1/2 ||hhat - h||^2 + lam TV(h), solved on the dual by accelerated
    forward-backward with step 1/8 and gradient-based momentum restart:

        y <- P_{|y| <= lam}(v + 1/8 grad(hhat - grad*(v))),   h = hhat - grad*(y)

    where v extrapolates the last two dual iterates. Stops once the duality
    gap falls below cfg.tol times the primal value, so the returned objective
    is within that relative distance of the optimum.
    """
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    hhat = as_field(hhat, name="h estimate")
    max_iter = max_iter or cfg.max_iter
    step = 1.0 / GRAD_NORM_SQ_BOUND
    g1, g2 = grad(hhat)
    y = (np.zeros_like(g1), np.zeros_like(g2))
    y_old = y
    v = y
    t_old = 1.0
    h = hhat.copy()
    trace = [tv_objective(h, hhat, lam)]
    converged = False
    rel_gap = math.inf
    it = 0
    logger.info(f"tv_denoise: lambda={lam}, grid={hhat.shape}, max_iter={max_iter}")
    for it in range(1, max_iter + 1):
        # restart the momentum when it points against the last step
        if np.sum((v[0] - y[0]) * (y[0] - y_old[0]) + (v[1] - y[1]) * (y[1] - y_old[1])) > 0:
            t_old = 1.0
        t = 0.5 + 0.5 * math.sqrt(1.0 + 4.0 * t_old ** 2)
        theta = (t_old - 1.0) / t
        v = (y[0] + theta * (y[0] - y_old[0]), y[1] + theta * (y[1] - y_old[1]))
        d1, d2 = grad(hhat - grad_adjoint(v))
        y_old = y
        y = project_disc((v[0] + step * d1, v[1] + step * d2), lam)
        t_old = t

        h = hhat - grad_adjoint(y)
        primal, gap = tv_duality_gap(h, y, hhat, lam)
        rel_gap = gap / max(primal, 1e-300)
        if it % cfg.monitor_every == 0:
            trace.append(primal)
            logger.debug(f"tv_denoise iter {it}: objective={primal:.6g}, relative gap={rel_gap:.3g}")
        if gap <= cfg.tol * primal:
            converged = True
            break
    trace.append(tv_objective(h, hhat, lam))
    if not converged:
        logger.warning(f"tv_denoise stopped after {it} iterations without convergence (relative gap={rel_gap:.3g})")
    logger.info(f"tv_denoise done: {it} iterations, converged={converged}")
    return TVResult(h=h, converged=converged, iterations=it, residual=rel_gap, dual=y, objective_trace=trace)


# ---------------------------------------------------------------- joint TV + weights

def tvw_step_size(l_x: float, sigma: float, rule: str = "safe") -> float:
    """Primal step: 0.99 / (1 + L_X + c sigma), c = 8 ('safe', the bound on ||[D; I]||^2) or 3 ('aggressive')."""
    c = GRAD_NORM_SQ_BOUND if rule == "safe" else 3.0
    return 0.99 / (1.0 + l_x + c * sigma)


def constraint_residuals(w: np.ndarray, j1: int, j2: int) -> List[float]:
    """Pixel means of |sum_j w(j,k)| and |sum_j j w(j,k) - 1|."""
    j = np.arange(j1, j2 + 1, dtype=np.float64)
    return [float(np.mean(np.abs(w.sum(axis=0)))),
            float(np.mean(np.abs(np.tensordot(j, w, axes=1) - 1.0)))]


def tvw_joint(
    stack: LeaderStack,
    lam: float,
    eta1: float,
    eta2: float,
    cfg: SolverConfig,
    init_weights: Optional[RegressionWeights] = None,
) -> TVWResult:
    """
    Joint estimation of h and per-pixel weights w minimising

        sum_k (sum_j w(j,k) log2X(j,k) - h(k))^2 + lam TV(h)
            + eta1 sum_k d_C1(w(.,k)) + eta2 sum_k d_C2(w(.,k))

    with C1 = {sum_j w = 0}, C2 = {sum_j j w = 1}. Gradient steps on (h, w),
    prox of tau eta1 d_C1 on w, dual variables for TV and for eta2 d_C2.
    Iterates in slope units; gamma is removed from the returned h.
    """
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    if eta1 < 0 or eta2 < 0:
        raise ParameterError(f"constraint penalties must be >= 0, got eta1={eta1}, eta2={eta2}")
    log_x = stack.log_leaders
    j1, j2 = stack.j1, stack.j2
    weights = init_weights or ols_weights(j1, j2)
    if (weights.j1, weights.j2) != (j1, j2):
        raise ShapeMismatchError("initial weights do not cover the leader scales")
    c1 = HyperplaneSpec.zero_sum(j1, j2)
    c2 = HyperplaneSpec.unit_slope(j1, j2)

    sigma = cfg.sigma
    l_x = float(np.max(np.sum(log_x ** 2, axis=0)))
    tau = tvw_step_size(l_x, sigma, cfg.step_rule)

    w = np.broadcast_to(weights.w[:, None, None], log_x.shape).copy()
    h = np.sum(w * log_x, axis=0)
    g1, _ = grad(h)
    y = (np.zeros_like(g1), np.zeros_like(g1))
    u = np.zeros_like(w)

    trace = [tvw_objective(h, w, log_x, lam, eta1, eta2, c1, c2)]
    converged = False
    change = math.inf
    it = 0
    logger.info(f"tvw_joint: lambda={lam}, eta=({eta1}, {eta2}), tau={tau:.3g}, sigma={sigma}, L_X={l_x:.3g}")
    for it in range(1, cfg.max_iter + 1):
        resid = np.sum(w * log_x, axis=0) - h
        h_new = h - tau * grad_adjoint(y) + 2.0 * tau * resid
        w_tilde = w - tau * u - 2.0 * tau * resid[None] * log_x
        w_new = prox_dist(w_tilde, c1, tau * eta1)

        d1, d2 = grad(2.0 * h_new - h)
        y = project_disc((y[0] + sigma * d1, y[1] + sigma * d2), lam)
        q = u + sigma * (2.0 * w_new - w)
        u = q - sigma * prox_dist(q / sigma, c2, eta2 / sigma)

        _check_finite([h_new, w_new], cfg.divergence_limit, tau, sigma, "tvw_joint")
        change = _rel_change([h_new, w_new], [h, w])
        h, w = h_new, w_new
        if it % cfg.monitor_every == 0:
            trace.append(tvw_objective(h, w, log_x, lam, eta1, eta2, c1, c2))
            logger.debug(f"tvw_joint iter {it}: objective={trace[-1]:.6g}, change={change:.3g}")
        if change < cfg.tol:
            converged = True
            break
    trace.append(tvw_objective(h, w, log_x, lam, eta1, eta2, c1, c2))
    residuals = constraint_residuals(w, j1, j2)
    if not converged:
        logger.warning(f"tvw_joint stopped after {it} iterations without convergence (change={change:.3g})")
    logger.info(f"tvw_joint done: {it} iterations, constraint residuals={residuals}")
    return TVWResult(h=h - stack.gamma, w=w, converged=converged, iterations=it, residual=change,
                     tau=tau, sigma=sigma, constraint_residuals=residuals, objective_trace=trace)


# ---------------------------------------------------------------- relaxed Potts

def potts_step_size(sigma: float, rule: str = "safe") -> float:
    """0.99 / (c sigma), c = 9 ('safe', the bound on ||[D; I]||^2) or 3 ('aggressive')."""
    c = GRAD_NORM_SQ_BOUND + 1.0 if rule == "safe" else 3.0
    return 0.99 / (c * sigma)


def extract_labels(theta: ThetaStack) -> LabelMask:
    """label(k) = argmax_q theta_{q-1}(k) - theta_q(k); ties go to the smaller q."""
    full = theta.full()
    return LabelMask(np.argmax(full[:-1] - full[1:], axis=0), theta.q)


def _nearest_mean_labels(costs: np.ndarray) -> np.ndarray:
    return np.argmin(costs, axis=0)


def _potts_inner(costs: np.ndarray, lam: float, theta: np.ndarray, y1: np.ndarray, y2: np.ndarray,
                 z: np.ndarray, tau: float, sigma: float, cfg: SolverConfig):
    """
    Primal-dual iterations for fixed costs. theta, y1, y2, z have Q-1 layers
    (index p = q-1 for theta_q). Odd pairs (theta_{q-1}, theta_q) are projected
    in the primal step, even pairs are handled by the dual z; pairs touching
    the fixed theta_0 or theta_Q reduce to the box and are skipped.
    """
    n_free = theta.shape[0]
    q_total = n_free + 1
    slope = costs[1:] - costs[:-1]
    # even q with both members free: q = 2, 4, ..., <= Q-1
    even_pairs = [(q - 2, q - 1) for q in range(2, q_total) if q % 2 == 0]
    odd_pairs = [(q - 2, q - 1) for q in range(3, q_total) if q % 2 == 1]
    paired = {i for pair in even_pairs for i in pair}
    unpaired = [p for p in range(n_free) if p not in paired]
    change = math.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        new = np.empty_like(theta)
        for p in range(n_free):
            new[p] = project_box01(theta[p] - tau * slope[p] - tau * z[p] - tau * grad_adjoint((y1[p], y2[p])))
        for a, b in odd_pairs:
            new[a], new[b] = project_ordered_pair(new[a], new[b])

        z_tilde = z + sigma * (2.0 * new - theta)
        for p in range(n_free):
            d1, d2 = grad(2.0 * new[p] - theta[p])
            y1[p], y2[p] = project_disc((y1[p] + sigma * d1, y2[p] + sigma * d2), lam)
        for a, b in even_pairs:
            pa, pb = project_ordered_pair(z_tilde[a] / sigma, z_tilde[b] / sigma)
            z[a] = z_tilde[a] - sigma * pa
            z[b] = z_tilde[b] - sigma * pb
        for p in unpaired:
            z[p] = 0.0

        _check_finite([new], cfg.divergence_limit, tau, sigma, "potts_segment")
        change = float(np.max(np.abs(new - theta))) / max(float(np.max(np.abs(new))), 1e-12)
        theta = new
        if change < cfg.tol:
            converged = True
            break
    return theta, y1, y2, z, it, converged, change


def potts_segment(hhat, q: int, lam: float, cfg: SolverConfig) -> PottsResult:
    """
    Relaxed Potts labelling of a regularity map with Gaussian costs
    (hhat - mu_q)^2 / (2 sigma_q^2). Means start equidistant on [min, max]
    and are re-estimated on the current regions until they move less than
    cfg.mu_tol or cfg.mu_outer_max rounds have run; the returned means are
    those of the last inner solve. lam = 0 gives the per-pixel nearest-mean
    labelling.
    """
    hhat = as_field(hhat, name="h estimate")
    if q < 1:
        raise ParameterError(f"class count must be >= 1, got {q}")
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    if q == 1:
        logger.info("potts_segment: Q=1, trivial labelling")
        theta = ThetaStack(np.zeros((0,) + hhat.shape), 1)
        return PottsResult(theta=theta, means=[float(hhat.mean())], converged=True,
                           iterations=0, outer_iterations=0, residual=0.0)

    variances = cfg.class_variances() if cfg.q == q else [0.5] * q
    means = np.linspace(hhat.min(), hhat.max(), q)
    sigma = cfg.sigma
    tau = potts_step_size(sigma, cfg.step_rule)

    costs = gaussian_costs(hhat, means, variances)
    theta = ThetaStack.from_labels(_nearest_mean_labels(costs), q).theta
    g1, _ = grad(hhat)
    y1 = np.zeros((q - 1,) + g1.shape)
    y2 = np.zeros_like(y1)
    z = np.zeros_like(theta)

    total_iter = 0
    inner_converged = True
    residual = 0.0
    empty: set[int] = set()
    trace: List[float] = []
    outer = 0
    mu_converged = False
    logger.info(f"potts_segment: Q={q}, lambda={lam}, tau={tau:.3g}, sigma={sigma}")
    for outer in range(1, cfg.mu_outer_max + 1):
        costs = gaussian_costs(hhat, means, variances)
        if lam == 0:
            theta = ThetaStack.from_labels(_nearest_mean_labels(costs), q).theta
            iters, inner_converged, residual = 0, True, 0.0
        else:
            theta, y1, y2, z, iters, inner_converged, residual = _potts_inner(
                costs, lam, theta, y1, y2, z, tau, sigma, cfg)
        total_iter += iters
        stack = ThetaStack(theta.copy(), q)
        trace.append(potts_objective(stack, costs, lam))
        labels = extract_labels(stack).labels

        new_means = means.copy()
        for c in range(q):
            region = labels == c
            if region.any():
                new_means[c] = hhat[region].mean()
            else:
                empty.add(c)
                logger.warning(f"potts_segment: region {c} empty at outer round {outer}; keeping mu={means[c]:.4g}")
        shift = float(np.max(np.abs(new_means - means)))
        logger.debug(f"potts_segment outer {outer}: mu={new_means.tolist()}, shift={shift:.3g}, inner={iters}")
        if shift < cfg.mu_tol:
            mu_converged = True
            break
        if outer < cfg.mu_outer_max:
            means = new_means

    stack = ThetaStack(theta, q)
    logger.info(f"potts_segment done: {outer} outer rounds, {total_iter} inner iterations")
    return PottsResult(theta=stack, means=[float(m) for m in means], converged=inner_converged and mu_converged,
                       iterations=total_iter, outer_iterations=outer, residual=residual, tau=tau, sigma=sigma,
                       empty_regions=sorted(empty), objective_trace=trace)


# ---------------------------------------------------------------- histogram thresholding

@dataclass
class ThresholdResult:
    mask: LabelMask
    thresholds: List[float]
    centers: npt.NDArray[np.float64] = None
    smoothed: npt.NDArray[np.float64] = None


def threshold_histogram(h, q: int, cfg: Optional[HistogramConfig] = None) -> ThresholdResult:
    """
    Thresholds at the q-1 most prominent minima of the Gaussian-smoothed
    histogram; missing thresholds sit at the largest peak. Labels count the
    thresholds at or below each value, so they are ordered by h.
    With ``cfg.fallback == "otsu"`` a shortage of minima is resolved by
    multi-Otsu thresholds on the map instead.
    """
    cfg = cfg or HistogramConfig()
    h = as_field(h, name="h map")
    if q < 1:
        raise ParameterError(f"class count must be >= 1, got {q}")
    zeros = np.zeros(h.shape, dtype=np.int64)
    if q == 1:
        return ThresholdResult(mask=LabelMask(zeros, 1), thresholds=[])
    lo, hi = float(h.min()), float(h.max())
    if hi - lo <= 1e-12 * max(1.0, abs(lo)):
        logger.warning(f"constant map (value {lo:.6g}); all pixels get one label")
        return ThresholdResult(mask=LabelMask(zeros, q), thresholds=[])

    counts, edges = np.histogram(h, bins=cfg.bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    smoothed = gaussian_filter1d(counts.astype(np.float64), cfg.smooth_bins, mode="constant", truncate=4.0)
    minima, props = find_peaks(-smoothed, prominence=0.0)
    prominence = props["prominences"]
    keep = prominence > 1e-12 * smoothed.max()
    minima, prominence = minima[keep], prominence[keep]
    # deepest first; ties keep the lower bin
    order = np.lexsort((minima, -prominence))
    chosen = [float(centers[i]) for i in minima[order][: q - 1]]
    if len(chosen) < q - 1 and cfg.fallback == "otsu":
        try:
            otsu = [float(t) for t in threshold_multiotsu(h, classes=q, nbins=cfg.bins)]
        except ValueError as e:
            logger.warning(f"multi-Otsu failed ({e}); falling back to the largest peak")
        else:
            logger.warning(f"only {len(chosen)} histogram minima for Q={q}; using multi-Otsu thresholds {otsu}")
            chosen = otsu
    if len(chosen) < q - 1:
        peak = float(centers[int(np.argmax(smoothed))])
        logger.warning(f"only {len(chosen)} histogram minima for Q={q}; placing the rest at the largest peak {peak:.4g}")
        chosen += [peak] * (q - 1 - len(chosen))
    thresholds = sorted(chosen)
    labels = np.searchsorted(np.asarray(thresholds), h, side="right").astype(np.int64)
    return ThresholdResult(mask=LabelMask(labels, q), thresholds=thresholds, centers=centers, smoothed=smoothed)
