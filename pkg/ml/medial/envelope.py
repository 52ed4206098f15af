"""
Envelope reconstruction: the polygon covered by a tube

The outline runs along the right offset of the axis, around the end cap, back
along the left offset and around the start cap (counter-clockwise). Outer
corners get round joins; inner corners get miter points.
"""

import logging
import math
from typing import List

import numpy as np

from ml.geometry import GeometryError, Polygon
from .tube import Tube

logger = logging.getLogger(__name__)

TURN_EPS = 1e-12


class EnvelopeError(ValueError):
    """Raised when a tube's offset outline overlaps itself"""


def _arc(center: np.ndarray, radius: float, theta0: float, sweep: float, chord: float, interior_only: bool) -> List[np.ndarray]:
    steps = max(1, int(math.ceil(abs(sweep) / chord - 1e-9)))
    j = np.arange(1, steps) if interior_only else np.arange(steps + 1)
    theta = theta0 + sweep * j / steps
    return list(center + radius * np.column_stack((np.cos(theta), np.sin(theta))))


def _dedupe(points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(np.diff(points, axis=0) != 0, axis=1)
    return points[keep]


def tube_envelope(tube: Tube, cap_segments: int = 8, cap_style: str = 'round') -> Polygon:
    """
    Polygon approximating all points within tube.radius of the axis

    Args:
        tube: Tube to outline
        cap_segments: Chords per semicircular end cap (joins use the same angular step)
        cap_style: 'round' for semicircular caps, 'flat' to cut the ends through
            the axis endpoints

    Raises:
        EnvelopeError: the offset overlaps itself (radius too large for a bend,
            or a hairpin), naming the axis vertex
    """
    if cap_segments < 1:
        raise ValueError(f"cap_segments must be >= 1, got {cap_segments}")
    if cap_style not in ('round', 'flat'):
        raise ValueError(f"cap_style must be 'round' or 'flat', got {cap_style!r}")

    pts = _dedupe(tube.axis.points)
    if len(pts) < 2:
        raise EnvelopeError("Tube axis collapses to a single point")

    r = float(tube.radius)
    chord = math.pi / cap_segments
    seg = np.diff(pts, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    d = seg / lengths[:, None]
    normals = np.column_stack((-d[:, 1], d[:, 0]))

    n = len(pts)
    turns = np.zeros(n)
    for k in range(1, n - 1):
        a, b = d[k - 1], d[k]
        turns[k] = math.atan2(a[0] * b[1] - a[1] * b[0], float(np.dot(a, b)))
        if abs(abs(turns[k]) - math.pi) < 1e-9:
            raise EnvelopeError(f"Axis folds back on itself at vertex {k}")

    # inner miters eat r * tan(|turn| / 2) of each adjacent segment
    use = r * np.tan(np.abs(turns) / 2.0)
    for i in range(n - 1):
        if use[i] + use[i + 1] > lengths[i] * (1 + 1e-9):
            k = i + 1 if use[i + 1] >= use[i] else i
            raise EnvelopeError(
                f"Radius {r:.4g} too large for the bend at axis vertex {k} (segment {i} overlaps)"
            )

    right: List[np.ndarray] = [pts[0] - r * normals[0]]
    left: List[np.ndarray] = [pts[-1] + r * normals[-1]]

    for k in range(1, n - 1):
        na, nb = normals[k - 1], normals[k]
        phi = turns[k]
        if phi > TURN_EPS:
            theta0 = math.atan2(-na[1], -na[0])
            right.extend(_arc(pts[k], r, theta0, phi, chord, interior_only=False))
        elif phi < -TURN_EPS:
            right.append(pts[k] - r * (na + nb) / (1.0 + float(np.dot(na, nb))))
        else:
            right.append(pts[k] - r * na)

    for k in range(n - 2, 0, -1):
        na, nb = normals[k - 1], normals[k]
        phi = turns[k]
        if phi < -TURN_EPS:
            theta0 = math.atan2(nb[1], nb[0])
            left.extend(_arc(pts[k], r, theta0, -phi, chord, interior_only=False))
        elif phi > TURN_EPS:
            left.append(pts[k] + r * (na + nb) / (1.0 + float(np.dot(na, nb))))
        else:
            left.append(pts[k] + r * na)

    right.append(pts[-1] - r * normals[-1])
    left.append(pts[0] + r * normals[0])

    outline = list(right)
    if cap_style == 'round':
        end_theta = math.atan2(-normals[-1][1], -normals[-1][0])
        outline.extend(_arc(pts[-1], r, end_theta, math.pi, chord, interior_only=True))
    outline.extend(left)
    if cap_style == 'round':
        start_theta = math.atan2(normals[0][1], normals[0][0])
        outline.extend(_arc(pts[0], r, start_theta, math.pi, chord, interior_only=True))

    ring = _dedupe(np.asarray(outline))
    try:
        return Polygon(ring)
    except GeometryError as e:
        raise EnvelopeError(f"Envelope of tube with radius {r:.4g} is not simple: {e}") from e
