"""
Tube loss: radius, axis, endpoints and spread terms

The axis term compares arc-length samples of the predicted medial axis with
the ground-truth axis through proximity and tangent kernels, so equivalent
vertex placements of the same curve score the same.
"""

import logging
from typing import Optional

import numpy as np

from ml.geometry import PolyChain, arc_length_sample
from ml.medial.tube import Tube
from .kernels import evaluate_kernels
from .types import LossConfig, LossConfigError, LossReport

logger = logging.getLogger(__name__)


def axis_similarities(pred_points: np.ndarray, pred_angles: np.ndarray, pred_chain: np.ndarray,
                      gt: PolyChain, sigma: float, cfg: LossConfig):
    """
    (s_abs, s_tan) for samples of the prediction; with cfg.symmetric_axis the
    reverse direction (gt samples against the prediction) is averaged in
    """
    fwd = evaluate_kernels(pred_points, pred_angles, gt.points, sigma, cfg.sigma_tan)
    sa, st = float(np.mean(fwd.a)), float(np.mean(fwd.b))
    if cfg.symmetric_axis:
        gt_samples = arc_length_sample(gt, cfg.n_samples)
        rev = evaluate_kernels(gt_samples.points, gt_samples.angles, pred_chain, sigma, cfg.sigma_tan)
        sa = 0.5 * (sa + float(np.mean(rev.a)))
        st = 0.5 * (st + float(np.mean(rev.b)))
    return sa, st


def loss_axis(pred: PolyChain, gt: PolyChain, cfg: LossConfig = LossConfig(),
              sigma_abs: Optional[float] = None) -> float:
    """
    1 - alpha * s_abs - (1 - alpha) * s_tan

    Args:
        sigma_abs: Proximity scale; falls back to cfg.sigma_abs, then 1.0 when
            no ground-truth radius is available
    """
    sigma = sigma_abs if sigma_abs is not None else (cfg.sigma_abs if cfg.sigma_abs is not None else 1.0)
    samples = arc_length_sample(pred, cfg.n_samples)
    sa, st = axis_similarities(samples.points, samples.angles, pred.points, gt, sigma, cfg)
    return 1.0 - cfg.alpha * sa - (1.0 - cfg.alpha) * st


def _spread(points: np.ndarray, gt_length: float, n_points: int) -> float:
    seg = np.diff(points, axis=0)
    d_min = float(np.min(np.hypot(seg[:, 0], seg[:, 1])))
    d_threshold = gt_length / (2.0 * (n_points - 1))
    return max(0.0, d_threshold - d_min)


def loss_spread(pred: PolyChain, gt_length: float, n_points: Optional[int] = None) -> float:
    """max(0, l / (2 (n - 1)) - shortest predicted segment)"""
    return _spread(pred.points, gt_length, n_points or pred.n_points)


def _endpoint_pairings(points: np.ndarray, gt_points: np.ndarray):
    g0, g1 = gt_points[0], gt_points[-1]
    same = float(np.abs(points[0] - g0).sum() + np.abs(points[-1] - g1).sum())
    swapped = float(np.abs(points[0] - g1).sum() + np.abs(points[-1] - g0).sum())
    return same, swapped


def loss_endpoints(pred: PolyChain, gt: PolyChain) -> float:
    """L1 endpoint distance under the better of the two endpoint pairings"""
    return min(_endpoint_pairings(pred.points, gt.points))


def loss_radius(pred_r: float, gt_r: float) -> float:
    return abs(float(pred_r) - float(gt_r))


def loss_keypoints(pred: PolyChain, gt: PolyChain) -> float:
    """
    Vertex-to-vertex L1 baseline: compares the i-th predicted vertex with the
    i-th ground-truth vertex, so it penalizes equivalent parametrizations
    """
    if pred.n_points != gt.n_points:
        raise LossConfigError(f"Keypoint loss needs equal vertex counts ({pred.n_points} vs {gt.n_points})")
    forward = float(np.abs(pred.points - gt.points).sum())
    backward = float(np.abs(pred.points[::-1] - gt.points).sum())
    return min(forward, backward) / pred.n_points


def report_from_samples(points: np.ndarray, radius: float, sample_points: np.ndarray,
                        sample_angles: np.ndarray, gt: Tube, cfg: LossConfig) -> LossReport:
    """All four terms for a prediction given by its vertices and its axis samples"""
    sigma = cfg.sigma_for(gt.radius)
    sa, st = axis_similarities(sample_points, sample_angles, points, gt.axis, sigma, cfg)
    scale = gt.radius if cfg.normalize_by_radius else 1.0

    radius_term = abs(radius - gt.radius) / scale
    axis_term = 1.0 - cfg.alpha * sa - (1.0 - cfg.alpha) * st
    endpoints_term = min(_endpoint_pairings(points, gt.axis.points)) / scale
    spread_term = _spread(points, gt.axis.length, cfg.n_points) / scale

    w = cfg.term_weights
    total = w[0] * radius_term + w[1] * axis_term + w[2] * endpoints_term + w[3] * spread_term
    return LossReport(
        radius_term=float(radius_term),
        axis_term=float(axis_term),
        endpoints_term=float(endpoints_term),
        spread_term=float(spread_term),
        total=float(total),
        s_abs=sa,
        s_tan=st,
    )


def loss_tube(pred: Tube, gt: Tube, cfg: LossConfig = LossConfig()) -> LossReport:
    """
    Weighted tube loss of a predicted tube against a ground-truth tube

    Raises:
        LossConfigError: the prediction does not have cfg.n_points medial points
    """
    if pred.n_points != cfg.n_points:
        raise LossConfigError(
            f"Predicted tube has {pred.n_points} medial points, config expects {cfg.n_points}"
        )
    samples = arc_length_sample(pred.axis, cfg.n_samples)
    return report_from_samples(pred.axis.points, pred.radius, samples.points, samples.angles, gt, cfg)
