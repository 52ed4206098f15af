"""
Proximity and tangent kernels between a sampled chain and a target chain
"""

import logging
from dataclasses import dataclass

import numpy as np

from ml.geometry import PolyChain, arc_length_sample, segment_projection

logger = logging.getLogger(__name__)

# closest-segment ties are resolved within this fraction of the target length
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class KernelEval:
    """Per-sample kernel values with the selected target segment"""
    a: np.ndarray        # proximity kernel exp(-d^2 / (2 sigma^2))
    b: np.ndarray        # tangent kernel exp(-sin^2(delta) / (2 sigma_t^2))
    d2: np.ndarray       # squared distance to the selected segment
    foot: np.ndarray     # (m, 2) closest point on the selected segment
    segment: np.ndarray  # selected target segment index
    u: np.ndarray        # clamped parameter of the foot on that segment
    delta: np.ndarray    # sample angle minus target tangent angle


def _chain_geometry(chain_points: np.ndarray):
    seg = np.diff(chain_points, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    angles = np.arctan2(seg[:, 1], seg[:, 0])
    return lengths, angles


def _select(points, angles, chain_points):
    u, feet, d2, u_raw = segment_projection(points, chain_points, return_raw=True)
    lengths, chain_angles = _chain_geometry(chain_points)
    valid = lengths > 0
    if not np.any(valid):
        valid = np.ones_like(valid)

    d = np.where(valid[None, :], np.sqrt(d2), np.inf)
    d_min = d.min(axis=1)
    tie = d <= d_min[:, None] + TIE_RTOL * max(1.0, float(lengths.sum()))

    # among equally close segments use the tangent most aligned with the sample
    misalign = np.sin(angles[:, None] - chain_angles[None, :]) ** 2
    segment = np.argmin(np.where(tie, misalign, np.inf), axis=1)
    return segment, u, feet, d2, u_raw, d, lengths, chain_angles, misalign


def evaluate_kernels(points: np.ndarray, angles: np.ndarray, chain_points: np.ndarray,
                     sigma: float, sigma_t: float) -> KernelEval:
    """
    Kernel values of samples (points with tangent angles) against a target chain

    Args:
        points: (m, 2) sample positions
        angles: (m,) sample tangent angles
        chain_points: (n, 2) target chain vertices
        sigma: Proximity scale (pixels)
        sigma_t: Tangent scale (unitless)
    """
    segment, u, feet, d2, _, _, _, chain_angles, _ = _select(points, angles, chain_points)
    rows = np.arange(len(segment))

    d2_sel = d2[rows, segment]
    delta = angles - chain_angles[segment]
    a = np.exp(-d2_sel / (2.0 * sigma ** 2))
    b = np.exp(-np.sin(delta) ** 2 / (2.0 * sigma_t ** 2))

    return KernelEval(a=a, b=b, d2=d2_sel, foot=feet[rows, segment], segment=segment,
                      u=u[rows, segment], delta=delta)


def near_tie_samples(points: np.ndarray, angles: np.ndarray, chain_points: np.ndarray, tol: float) -> np.ndarray:
    """
    Indices of samples whose closest-segment choice can switch under a
    perturbation of size tol

    A shared-vertex tie is stable when the sample sits inside the vertex wedge
    (both projections clamped onto it) and one tangent is clearly better aligned.
    """
    segment, u, feet, d2, u_raw, d, lengths, chain_angles, misalign = _select(points, angles, chain_points)
    rows = np.arange(len(segment))
    d_sel = d[rows, segment]
    safe_len = np.where(lengths > 0, lengths, 1.0)

    near = (d <= d_sel[:, None] + tol) & np.isfinite(d)
    near[rows, segment] = False

    foot_gap = np.hypot(*(feet - feet[rows, segment][:, None, :]).transpose(2, 0, 1))
    margin = tol / safe_len
    clamped = (u_raw < -margin[None, :]) | (u_raw > 1.0 + margin[None, :])
    wedge = clamped & clamped[rows, segment][:, None] & (foot_gap <= tol)

    parallel = np.sin(chain_angles[None, :] - chain_angles[segment][:, None]) ** 2 <= 1e-12
    clear_choice = np.abs(misalign - misalign[rows, segment][:, None]) > tol
    stable = wedge & (clear_choice | parallel)

    return np.flatnonzero(np.any(near & ~stable, axis=1))


def s_abs(pred: PolyChain, gt: PolyChain, sigma: float, m: int = 100) -> float:
    """Mean proximity kernel over m uniform samples of pred, distances to gt"""
    samples = arc_length_sample(pred, m)
    return float(np.mean(evaluate_kernels(samples.points, samples.angles, gt.points, sigma, 1.0).a))


def s_tan(pred: PolyChain, gt: PolyChain, sigma_t: float = 0.5, m: int = 100) -> float:
    """Mean tangent kernel over m uniform samples of pred, tangents at the gt closest point"""
    samples = arc_length_sample(pred, m)
    return float(np.mean(evaluate_kernels(samples.points, samples.angles, gt.points, 1.0, sigma_t).b))
