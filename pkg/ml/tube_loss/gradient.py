"""
Analytic gradient of the tube loss under frozen sample allocation

Each axis sample of the prediction keeps its segment index and
within-segment fraction while differentiating, so sample positions are affine
in the medial points. FrozenObjective evaluates that same objective, which
makes central finite differences a direct oracle for the analytic gradient.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ml.geometry import arc_length_sample
from ml.medial.tube import Tube
from .kernels import evaluate_kernels, near_tie_samples
from .tube_loss import _endpoint_pairings, report_from_samples
from .types import LossConfig, LossConfigError, LossReport, TubeGradient

logger = logging.getLogger(__name__)


def _angle_jacobian(v: np.ndarray) -> np.ndarray:
    """d atan2(vy, vx) / dv, zero for degenerate vectors"""
    vv = np.einsum('ij,ij->i', v, v)
    safe = np.where(vv > 0, vv, 1.0)
    jac = np.column_stack((-v[:, 1], v[:, 0])) / safe[:, None]
    jac[vv == 0] = 0.0
    return jac


class FrozenObjective:
    """Tube loss with the prediction's sample allocation fixed at construction"""

    def __init__(self, pred: Tube, gt: Tube, cfg: LossConfig = LossConfig()):
        samples = arc_length_sample(pred.axis, cfg.n_samples)
        self.segment_index = samples.segment_index
        self.fraction = samples.fraction
        self.gt = gt
        self.cfg = cfg
        self.sigma = cfg.sigma_for(gt.radius)
        self.gt_samples = arc_length_sample(gt.axis, cfg.n_samples) if cfg.symmetric_axis else None

    def samples(self, points: np.ndarray):
        i = self.segment_index
        start = points[i]
        v = points[i + 1] - start
        return start + self.fraction[:, None] * v, np.arctan2(v[:, 1], v[:, 0])

    def report(self, points, radius: float) -> LossReport:
        pts = np.asarray(points, dtype=float)
        pos, ang = self.samples(pts)
        return report_from_samples(pts, float(radius), pos, ang, self.gt, self.cfg)

    def __call__(self, points, radius: float) -> float:
        return self.report(points, radius).total

    def gradient(self, points, radius: float) -> TubeGradient:
        cfg = self.cfg
        gt = self.gt
        pts = np.asarray(points, dtype=float)
        n = len(pts)
        tol = cfg.nonsmooth_tolerance
        w_r, w_a, w_e, w_s = cfg.term_weights
        scale = gt.radius if cfg.normalize_by_radius else 1.0
        sigma, sigma_t, alpha = self.sigma, cfg.sigma_tan, cfg.alpha
        direction_weight = 0.5 if cfg.symmetric_axis else 1.0

        grad = np.zeros((n, 2))
        reasons: List[str] = []

        # axis term, prediction samples against the ground truth
        pos, ang = self.samples(pts)
        fwd = evaluate_kernels(pos, ang, gt.axis.points, sigma, sigma_t)
        m = len(pos)
        d_prox = (alpha * direction_weight / (m * sigma ** 2)) * fwd.a[:, None] * (pos - fwd.foot)
        d_tan = ((1.0 - alpha) * direction_weight / (2.0 * m * sigma_t ** 2)) * fwd.b * np.sin(2.0 * fwd.delta)

        i, f = self.segment_index, self.fraction
        np.add.at(grad, i, w_a * (1.0 - f)[:, None] * d_prox)
        np.add.at(grad, i + 1, w_a * f[:, None] * d_prox)
        jac = _angle_jacobian(pts[i + 1] - pts[i])
        np.add.at(grad, i + 1, w_a * d_tan[:, None] * jac)
        np.add.at(grad, i, -w_a * d_tan[:, None] * jac)

        if len(near_tie_samples(pos, ang, gt.axis.points, tol)):
            reasons.append('closest-segment tie on the ground-truth axis')

        # reverse direction, ground-truth samples against the prediction
        if self.gt_samples is not None:
            gs = self.gt_samples
            rev = evaluate_kernels(gs.points, gs.angles, pts, sigma, sigma_t)
            m_r = len(gs.points)
            pull = (alpha * direction_weight / (m_r * sigma ** 2)) * rev.a[:, None] * (gs.points - rev.foot)
            k, u = rev.segment, rev.u
            np.add.at(grad, k, -w_a * (1.0 - u)[:, None] * pull)
            np.add.at(grad, k + 1, -w_a * u[:, None] * pull)
            d_tan_r = ((1.0 - alpha) * direction_weight / (2.0 * m_r * sigma_t ** 2)) * rev.b * np.sin(2.0 * rev.delta)
            jac_r = _angle_jacobian(pts[k + 1] - pts[k])
            np.add.at(grad, k + 1, -w_a * d_tan_r[:, None] * jac_r)
            np.add.at(grad, k, w_a * d_tan_r[:, None] * jac_r)

            if len(near_tie_samples(gs.points, gs.angles, pts, tol)):
                reasons.append('closest-segment tie on the predicted axis')

        # endpoints
        same, swapped = _endpoint_pairings(pts, gt.axis.points)
        if abs(same - swapped) <= tol:
            reasons.append('endpoint pairing tie')
        g0, g1 = gt.axis.points[0], gt.axis.points[-1]
        targets = (g0, g1) if same <= swapped else (g1, g0)
        for idx, target in ((0, targets[0]), (n - 1, targets[1])):
            diff = pts[idx] - target
            if np.any(np.abs(diff) <= tol):
                reasons.append(f'endpoint {idx} on an L1 kink')
            grad[idx] += (w_e / scale) * np.sign(diff)

        # spread
        seg = np.diff(pts, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(lengths <= tol):
            reasons.append('zero-length predicted segment')
        d_threshold = gt.axis.length / (2.0 * (cfg.n_points - 1))
        j = int(np.argmin(lengths))
        d_min = float(lengths[j])
        if abs(d_threshold - d_min) <= tol:
            reasons.append('shortest segment at the spread threshold')
        if d_threshold - d_min > 0 and d_min > 0:
            if len(lengths) > 1 and np.sort(lengths)[1] - d_min <= tol:
                reasons.append('shortest-segment tie')
            unit = seg[j] / d_min
            grad[j + 1] -= (w_s / scale) * unit
            grad[j] += (w_s / scale) * unit

        # radius
        dr = float(radius) - gt.radius
        if abs(dr) <= tol:
            reasons.append('radius on the L1 kink')
        d_radius = (w_r / scale) * float(np.sign(dr))

        if reasons:
            logger.debug(f"Gradient evaluated at a non-smooth point: {', '.join(reasons)}")
        return TubeGradient(d_points=grad, d_radius=d_radius, non_smooth=bool(reasons), reasons=tuple(reasons))


def grad_loss_tube(pred: Tube, gt: Tube, cfg: LossConfig = LossConfig()) -> TubeGradient:
    """Gradient of loss_tube with respect to the predicted medial points and radius"""
    if pred.n_points != cfg.n_points:
        raise LossConfigError(
            f"Predicted tube has {pred.n_points} medial points, config expects {cfg.n_points}"
        )
    return FrozenObjective(pred, gt, cfg).gradient(pred.axis.points, pred.radius)


def finite_difference_gradient(pred: Tube, gt: Tube, cfg: LossConfig = LossConfig(), h: float = 1e-5) -> np.ndarray:
    """
    Central differences of the frozen-allocation objective

    Returns:
        Flat vector ordered like TubeGradient.flat()
    """
    objective = FrozenObjective(pred, gt, cfg)
    x0 = np.concatenate((pred.axis.points.ravel(), [pred.radius]))
    grad = np.zeros_like(x0)

    def evaluate(x):
        return objective(x[:-1].reshape(-1, 2), x[-1])

    for j in range(len(x0)):
        x = x0.copy()
        x[j] = x0[j] + h
        f_plus = evaluate(x)
        x[j] = x0[j] - h
        f_minus = evaluate(x)
        grad[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


@dataclass
class GradCheckReport:
    seed: int
    n_trials: int
    h: float
    errors: List[float] = field(default_factory=list)
    n_resampled: int = 0

    @property
    def max_error(self) -> float:
        return float(max(self.errors)) if self.errors else 0.0

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors)) if self.errors else 0.0


def gradient_check(seed: int, n_trials: int, cfg: LossConfig = LossConfig(), h: float = 1e-5,
                   max_attempts: int = 50, rng: Optional[np.random.Generator] = None) -> GradCheckReport:
    """
    Compare analytic and finite-difference gradients on random configurations

    Configurations flagged as non-smooth are redrawn (up to max_attempts per trial).
    """
    from ml.synthetic import random_gradcheck_pair

    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    rng = rng or np.random.default_rng(seed)
    report = GradCheckReport(seed=seed, n_trials=n_trials, h=h)

    for trial in range(n_trials):
        for _ in range(max_attempts):
            pred, gt = random_gradcheck_pair(rng, cfg.n_points)
            analytic = grad_loss_tube(pred, gt, cfg)
            if not analytic.non_smooth:
                break
            report.n_resampled += 1
        else:
            raise RuntimeError(f"Could not draw a smooth configuration for trial {trial}")

        numeric = finite_difference_gradient(pred, gt, cfg, h)
        report.errors.append(relative_error(analytic.flat(), numeric))

    logger.info(
        f"Gradient check: {n_trials} trials, max rel err {report.max_error:.3e}, "
        f"median {report.median_error:.3e}, {report.n_resampled} redraws"
    )
    return report
