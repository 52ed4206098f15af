"""
Gradient-based tube fitting against a ground-truth tube

Proximal gradient descent: the axis and spread terms take gradient steps, the
L1 terms (radius, endpoints) take their proximal step, which soft-thresholds
the radius and the matched endpoints towards their targets. Steps are chosen
by backtracking on the total loss.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ml.geometry import GeometryError, PolyChain
from ml.medial.tube import Tube
from .gradient import FrozenObjective
from .tube_loss import _endpoint_pairings, loss_tube
from .types import DescentDivergedError, LossConfig, LossConfigError

logger = logging.getLogger(__name__)

CONVERGED = 'converged'
MAX_ITERS = 'max_iters'
STALLED = 'stalled'


@dataclass
class DescentResult:
    tube: Tube
    trajectory: List[float] = field(default_factory=list)  # loss after each accepted step
    iterations: int = 0
    status: str = CONVERGED
    initial_loss: float = 0.0

    @property
    def final_loss(self) -> float:
        return self.trajectory[-1] if self.trajectory else self.initial_loss


def _soft_threshold(x: np.ndarray, lam: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def _smooth_gradient(points: np.ndarray, radius: float, gt: Tube, cfg: LossConfig) -> np.ndarray:
    """Gradient of the axis + spread part with respect to the medial points"""
    smooth_cfg = LossConfig(
        alpha=cfg.alpha, sigma_abs=cfg.sigma_abs, sigma_tan=cfg.sigma_tan,
        n_samples=cfg.n_samples, n_points=cfg.n_points,
        term_weights=(0.0, cfg.term_weights[1], 0.0, cfg.term_weights[3]),
        symmetric_axis=cfg.symmetric_axis, normalize_by_radius=cfg.normalize_by_radius,
        nonsmooth_tolerance=cfg.nonsmooth_tolerance,
    )
    tube = Tube(PolyChain(points, strict=False), radius)
    objective = FrozenObjective(tube, gt, smooth_cfg)
    return objective.gradient(points, radius).d_points


def _prox(y: np.ndarray, radius: float, gt: Tube, cfg: LossConfig, t: float, pairing_same: bool):
    scale = gt.radius if cfg.normalize_by_radius else 1.0
    w_r, _, w_e, _ = cfg.term_weights
    out = y.copy()

    g0, g1 = gt.axis.points[0], gt.axis.points[-1]
    targets = (g0, g1) if pairing_same else (g1, g0)
    lam_e = t * w_e / scale
    out[0] = targets[0] + _soft_threshold(y[0] - targets[0], lam_e)
    out[-1] = targets[1] + _soft_threshold(y[-1] - targets[1], lam_e)

    new_radius = gt.radius + float(_soft_threshold(np.array([radius - gt.radius]), t * w_r / scale)[0])
    return out, new_radius


def fit_tube_descent(init: Tube, gt: Tube, cfg: LossConfig = LossConfig(), max_iters: int = 500,
                     step: float = 1.0, tol: float = 1e-6) -> DescentResult:
    """
    Minimize loss_tube over the medial points and radius of `init`

    Args:
        init: Starting tube with cfg.n_points medial points
        gt: Ground-truth tube
        max_iters: Iteration cap
        step: Step scale; the largest trial step is 10 * step * sigma_abs^2
        tol: Stop when the gradient-mapping norm falls below this

    Returns:
        DescentResult with the final tube, the non-increasing loss trajectory
        (initial loss excluded) and a status of converged, max_iters or stalled.
        Stalled means backtracking found no decrease down to the smallest
        step; the last accepted tube is returned.

    Raises:
        DescentDivergedError: no trial step produced a finite loss
    """
    if init.n_points != cfg.n_points:
        raise LossConfigError(f"Initial tube has {init.n_points} medial points, config expects {cfg.n_points}")
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")

    sigma = cfg.sigma_for(gt.radius)
    t_max = 10.0 * step * sigma ** 2
    t_min = 1e-12 * t_max

    points = init.axis.points.copy()
    radius = float(init.radius)
    total = loss_tube(init, gt, cfg).total
    result = DescentResult(tube=init, initial_loss=total)
    t_prev = 0.5 * t_max

    for it in range(max_iters):
        grad = _smooth_gradient(points, radius, gt, cfg)
        same, swapped = _endpoint_pairings(points, gt.axis.points)
        t = min(2.0 * t_prev, t_max)
        first_trial = True
        accepted = False
        last_candidate = np.inf

        while t >= t_min:
            y = points - t * grad
            cand_points, cand_radius = _prox(y, radius, gt, cfg, t, same <= swapped)
            delta = np.concatenate(((cand_points - points).ravel(), [cand_radius - radius]))

            if first_trial:
                first_trial = False
                if np.linalg.norm(delta) / t < tol:
                    result.status = CONVERGED
                    result.iterations = it
                    result.tube = Tube(PolyChain(points, strict=False), radius)
                    logger.debug(f"Descent converged after {it} iterations, loss {total:.6g}")
                    return result

            try:
                cand_total = loss_tube(Tube(PolyChain(cand_points, strict=False), cand_radius), gt, cfg).total
            except (GeometryError, ValueError):
                t *= 0.5
                continue

            last_candidate = cand_total
            if np.isfinite(cand_total) and cand_total <= total - 1e-4 * float(delta @ delta) / (2.0 * t):
                accepted = True
                break
            t *= 0.5

        if not accepted:
            current = Tube(PolyChain(points, strict=False), radius)
            if not np.isfinite(last_candidate):
                raise DescentDivergedError(
                    f"No trial step from loss {total:.6g} gave a finite loss",
                    result.trajectory,
                    tube=current,
                )
            # a finite increase at the smallest step means a kink or a
            # closest-segment switch, not a smooth ascent direction
            result.status = STALLED
            result.iterations = it
            result.tube = current
            logger.debug(
                f"Descent stalled after {it} iterations at loss {total:.6g} "
                f"(smallest step gave {last_candidate:.6g})"
            )
            return result

        points, radius, total, t_prev = cand_points, cand_radius, cand_total, t
        result.trajectory.append(total)

    result.status = MAX_ITERS
    result.iterations = max_iters
    result.tube = Tube(PolyChain(points, strict=False), radius)
    return result
