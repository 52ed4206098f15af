"""
Operations on polygonal chains: arc-length sampling, closest-point queries,
chain-to-chain distances
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import shapely

from .primitives import GeometryError, Point2, PolyChain

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainSamples:
    """
    Uniform arc-length samples of a chain with their frozen allocation

    Each sample is points[j] = (1 - fraction[j]) * X[i] + fraction[j] * X[i + 1]
    with i = segment_index[j], so positions are affine in the chain vertices
    while the allocation is held fixed.
    """
    points: np.ndarray          # (m, 2)
    angles: np.ndarray          # (m,) angle of the containing segment
    t: np.ndarray               # (m,) arc-length fractions in [0, 1]
    segment_index: np.ndarray   # (m,) int
    fraction: np.ndarray        # (m,) position inside the segment, in [0, 1]

    def __len__(self) -> int:
        return len(self.t)

    def as_list(self) -> List[Tuple[Point2, float, float]]:
        return [
            (Point2(float(p[0]), float(p[1])), float(a), float(t))
            for p, a, t in zip(self.points, self.angles, self.t)
        ]


def arc_length_sample(chain: PolyChain, m: int) -> ChainSamples:
    """
    Sample m points at inclusive uniform arc-length fractions t_j = j / (m - 1)

    A sample landing exactly on an interior vertex is allocated to the segment
    ending at that vertex; no sample is allocated to a zero-length segment.

    Args:
        chain: Chain to sample
        m: Number of samples, m >= 2

    Returns:
        ChainSamples with positions, tangent angles and allocation
    """
    if m < 2:
        raise GeometryError(f"arc_length_sample needs m >= 2, got {m}")
    total = chain.length
    if total <= 0:
        raise GeometryError("Cannot sample a chain of zero length")

    cumulative = chain.cumulative_lengths
    lengths = chain.segment_lengths
    pts = chain.points

    j = np.arange(m, dtype=float)
    t = j / (m - 1)
    s = j * total / (m - 1)
    s[-1] = total

    idx = np.searchsorted(cumulative, s, side='left') - 1
    idx = np.clip(idx, 0, chain.n_segments - 1)

    # samples on a run of coincident vertices move to the nearest segment with length
    zero = lengths[idx] == 0
    if np.any(zero):
        positive = np.flatnonzero(lengths > 0)
        nearest = positive[np.clip(np.searchsorted(positive, idx[zero]), 0, len(positive) - 1)]
        idx[zero] = nearest

    seg_len = lengths[idx]
    safe_len = np.where(seg_len > 0, seg_len, 1.0)
    fraction = np.where(seg_len > 0, (s - cumulative[idx]) / safe_len, 0.0)
    fraction = np.clip(fraction, 0.0, 1.0)

    start = pts[idx]
    delta = pts[idx + 1] - start
    points = start + fraction[:, None] * delta
    angles = chain.segment_angles[idx]

    return ChainSamples(points=points, angles=angles, t=t, segment_index=idx, fraction=fraction)


def segment_projection(points: np.ndarray, chain_points: np.ndarray, return_raw: bool = False):
    """
    Project every point onto every segment of a chain

    Args:
        points: (P, 2) query points
        chain_points: (n, 2) chain vertices
        return_raw: Also return the unclamped segment parameter

    Returns:
        Tuple (u, feet, d2), each indexed [point, segment]: clamped segment
        parameter in [0, 1], foot coordinates (P, S, 2) and squared distance.
        With return_raw, the unclamped parameter is appended.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = chain_points[:-1]
    b = chain_points[1:]
    v = b - a
    vv = np.einsum('ij,ij->i', v, v)
    safe_vv = np.where(vv > 0, vv, 1.0)

    w = pts[:, None, :] - a[None, :, :]
    u_raw = np.einsum('psk,sk->ps', w, v) / safe_vv
    u = np.where(vv > 0, np.clip(u_raw, 0.0, 1.0), 0.0)

    feet = a[None, :, :] + u[..., None] * v[None, :, :]
    diff = pts[:, None, :] - feet
    d2 = np.einsum('psk,psk->ps', diff, diff)
    if return_raw:
        return u, feet, d2, u_raw
    return u, feet, d2


def project_points(points, chain: PolyChain):
    """
    Vectorized closest-point query, lowest segment index on ties

    Returns:
        Tuple (distance (P,), foot (P, 2), tangent_angle (P,), segment (P,))
    """
    u, feet, d2 = segment_projection(points, chain.points)
    seg = np.argmin(d2, axis=1)
    rows = np.arange(len(seg))
    distance = np.sqrt(d2[rows, seg])
    foot = feet[rows, seg]
    angle = chain.segment_angles[seg]
    return distance, foot, angle, seg


def project_to_chain(p, chain: PolyChain) -> Tuple[float, Point2, float]:
    """
    Distance from p to the chain, the attaining foot point and the tangent
    angle of the attaining segment (ties break by lowest segment index)
    """
    distance, foot, angle, _ = project_points(np.asarray([p], dtype=float), chain)
    return float(distance[0]), Point2(float(foot[0, 0]), float(foot[0, 1])), float(angle[0])


def resample_chain(chain: PolyChain, n_points: int, strict: bool = True) -> PolyChain:
    """Uniform arc-length resampling to n_points vertices"""
    samples = arc_length_sample(chain, n_points)
    return PolyChain(samples.points, strict=strict)


def hausdorff_distance(a, b, densify: float = 0.01) -> float:
    """
    Hausdorff distance between two chains (or raw point lists), both
    densified along their segments
    """
    line_a = a.as_linestring() if isinstance(a, PolyChain) else shapely.linestrings(np.asarray(a, dtype=float))
    line_b = b.as_linestring() if isinstance(b, PolyChain) else shapely.linestrings(np.asarray(b, dtype=float))
    return float(shapely.hausdorff_distance(line_a, line_b, densify=densify))


def insert_collinear_vertices(chain: PolyChain, fractions) -> PolyChain:
    """
    Insert vertices at the given arc-length fractions without changing the
    traced curve (an equivalent parametrization of the same chain)
    """
    extra = np.sort(np.asarray(fractions, dtype=float))
    if len(extra) == 0:
        return chain
    total = chain.length
    cumulative = chain.cumulative_lengths
    s_new = extra * total

    merged_s = np.concatenate((cumulative, s_new))
    order = np.argsort(merged_s, kind='stable')
    merged_s = merged_s[order]

    idx = np.clip(np.searchsorted(cumulative, merged_s, side='right') - 1, 0, chain.n_segments - 1)
    seg_len = chain.segment_lengths[idx]
    frac = np.where(seg_len > 0, (merged_s - cumulative[idx]) / np.where(seg_len > 0, seg_len, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    pts = chain.points[idx] + frac[:, None] * (chain.points[idx + 1] - chain.points[idx])

    # drop duplicates created by inserting on top of existing vertices
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > 1e-12, axis=1)
    return PolyChain(pts[keep], strict=chain.strict)
