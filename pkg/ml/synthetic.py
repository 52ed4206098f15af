"""
Seeded synthetic shapes: text-like bands, rectangles, star polygons and
random tubes with perturbations

Used by the acceptance harnesses (gradcheck, demofit) and the test suites.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ml.geometry import PolyChain, Polygon, similarity_transform
from ml.medial.tube import Tube

logger = logging.getLogger(__name__)


def band_polygon(centerline: np.ndarray, half_widths) -> Polygon:
    """
    Paired-chain polygon around a centerline: the top chain followed by the
    reversed bottom chain, offset along the centerline normals

    Args:
        centerline: (k, 2) stations
        half_widths: scalar or (k,) half widths
    """
    c = np.asarray(centerline, dtype=float)
    w = np.broadcast_to(np.asarray(half_widths, dtype=float), (len(c),))
    tangent = np.gradient(c, axis=0)
    tangent /= np.hypot(tangent[:, 0], tangent[:, 1])[:, None]
    normal = np.column_stack((-tangent[:, 1], tangent[:, 0]))
    top = c + w[:, None] * normal
    bottom = c - w[:, None] * normal
    return Polygon(np.vstack((top, bottom[::-1])))


def sine_band_polygon(length: float = 30.0, amplitude: float = 2.0, wavelength_scale: float = 5.0,
                      half_width: float = 3.0, n_stations: int = 61, taper: float = 0.0) -> Polygon:
    """
    Band of the given half width around y = amplitude * sin(x / wavelength_scale)
    for x in [0, length]; taper varies the half width linearly by +/- taper
    """
    x = np.linspace(0.0, length, n_stations)
    centerline = np.column_stack((x, amplitude * np.sin(x / wavelength_scale)))
    widths = half_width * (1.0 + taper * np.linspace(1.0, -1.0, n_stations))
    return band_polygon(centerline, widths)


def rectangle_polygon(width: float, height: float, angle: float = 0.0, center=(0.0, 0.0)) -> Polygon:
    corners = np.array([[0, 0], [width, 0], [width, height], [0, height]], dtype=float)
    corners -= [width / 2.0, height / 2.0]
    return Polygon(similarity_transform(corners, angle, 1.0, center))


def rectangle_midline(width: float, height: float, angle: float = 0.0, center=(0.0, 0.0)) -> np.ndarray:
    """Endpoints of the long mid-line of rectangle_polygon"""
    if width >= height:
        line = np.array([[-width / 2.0, 0.0], [width / 2.0, 0.0]])
    else:
        line = np.array([[0.0, -height / 2.0], [0.0, height / 2.0]])
    return similarity_transform(line, angle, 1.0, center)


def star_polygon(rng: np.random.Generator, n_vertices: int = 8, r_min: float = 2.0, r_max: float = 10.0,
                 center=(0.0, 0.0)) -> Polygon:
    """Random star-shaped (hence simple) polygon"""
    gaps = rng.uniform(0.5, 1.5, n_vertices)
    angles = np.cumsum(gaps) / gaps.sum() * 2.0 * math.pi
    radii = rng.uniform(r_min, r_max, n_vertices)
    pts = np.column_stack((radii * np.cos(angles), radii * np.sin(angles))) + np.asarray(center, dtype=float)
    return Polygon(pts)


def random_band(rng: np.random.Generator, max_taper: float = 0.08, n_stations: int = 41) -> Polygon:
    """
    Gently curved band: half width 4-8, length 15-25 half widths, amplitude at
    most half the half width, covering a quarter to half of a sine period
    """
    w = rng.uniform(4.0, 8.0)
    length = w * rng.uniform(15.0, 25.0)
    amplitude = w * rng.uniform(0.0, 0.5)
    scale = length * rng.uniform(2.0, 4.0) / (2.0 * math.pi)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    taper = rng.uniform(0.0, max_taper)

    x = np.linspace(0.0, length, n_stations)
    centerline = np.column_stack((x, amplitude * np.sin(x / scale + phase)))
    widths = w * (1.0 + taper * np.linspace(1.0, -1.0, n_stations))

    angle = rng.uniform(0.0, 2.0 * math.pi)
    offset = rng.uniform(-100.0, 100.0, 2)
    band = band_polygon(centerline, widths)
    return band.transformed(angle, 1.0, offset)


def random_tube(rng: np.random.Generator, n_points: int = 5, radius_range: Tuple[float, float] = (3.0, 6.0),
                max_turn: float = 0.3, segment_scale: Tuple[float, float] = (3.0, 5.0),
                center=(0.0, 0.0)) -> Tube:
    """
    Smooth random tube: segments of 3-5 radii, turning at most max_turn per vertex
    """
    radius = rng.uniform(*radius_range)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    points = [np.zeros(2)]
    for _ in range(n_points - 1):
        step = radius * rng.uniform(*segment_scale)
        points.append(points[-1] + step * np.array([math.cos(heading), math.sin(heading)]))
        heading += rng.uniform(-max_turn, max_turn)
    pts = np.array(points)
    pts += np.asarray(center, dtype=float) - pts.mean(axis=0)
    return Tube(PolyChain(pts), radius)


def perturb_tube(rng: np.random.Generator, tube: Tube, vertex_noise: float = 0.5,
                 radius_range: Tuple[float, float] = (0.7, 1.3)) -> Tube:
    """
    Move every medial point by at most vertex_noise * radius and scale the
    radius by a factor drawn from radius_range
    """
    n = tube.n_points
    direction = rng.uniform(0.0, 2.0 * math.pi, n)
    magnitude = vertex_noise * tube.radius * rng.uniform(0.0, 1.0, n)
    shift = magnitude[:, None] * np.column_stack((np.cos(direction), np.sin(direction)))
    return Tube(PolyChain(tube.axis.points + shift, strict=False), tube.radius * rng.uniform(*radius_range))


def random_gradcheck_pair(rng: np.random.Generator, n_points: int = 5) -> Tuple[Tube, Tube]:
    """(prediction, ground truth) with a clearly non-degenerate prediction"""
    while True:
        gt = random_tube(rng, n_points, max_turn=0.6)
        pred = perturb_tube(rng, gt, vertex_noise=0.8, radius_range=(0.6, 1.4))
        shift = rng.uniform(-0.5, 0.5, 2) * gt.radius
        pred = Tube(PolyChain(pred.axis.points + shift, strict=False), pred.radius)
        if np.min(pred.axis.segment_lengths) > 0.5 * gt.radius:
            return pred, gt


def random_tube_detections(rng: np.random.Generator, n: int, extent: float = 100.0,
                           image_id: str = 'img') -> List[dict]:
    """Random straight-ish tube detections as canonical records"""
    records = []
    for k in range(n):
        center = rng.uniform(0.0, extent, 2)
        tube = random_tube(rng, 5, radius_range=(2.0, 5.0), max_turn=0.15, segment_scale=(1.5, 3.0), center=center)
        records.append({
            'image_id': image_id,
            'score': float(np.round(rng.uniform(0.05, 1.0), 6)),
            'tube': tube.to_dict(),
            'detection_id': k,
        })
    return records


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)
