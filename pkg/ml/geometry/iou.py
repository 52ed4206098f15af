"""
Intersection-over-union: exact polygon clipping, a rasterized oracle and
axis-aligned boxes
"""

import logging
from typing import Sequence

import numpy as np
from shapely.errors import GEOSException

from .primitives import GeometryError, Polygon

logger = logging.getLogger(__name__)

RASTER_ROW_CHUNK = 64


def polygon_iou(a: Polygon, b: Polygon) -> float:
    """
    Exact IoU of two simple polygons

    Intersection comes from polygon clipping; the union is
    area(a) + area(b) - area(a & b).
    """
    if a.n_vertices == b.n_vertices and np.array_equal(a.vertices, b.vertices):
        return 1.0
    if not a.shape.intersects(b.shape):
        return 0.0

    try:
        inter = a.shape.intersection(b.shape).area
    except GEOSException as e:
        raise GeometryError(f"Polygon clipping failed: {e}") from e

    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return float(np.clip(inter / union, 0.0, 1.0))


def _even_odd_mask(vertices: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Crossing-number point-in-polygon over the lattice xs × ys (rows = ys)"""
    x1, y1 = vertices[:, 0], vertices[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    dy = y2 - y1
    safe_dy = np.where(dy != 0, dy, 1.0)

    mask = np.zeros((len(ys), len(xs)), dtype=bool)
    for start in range(0, len(ys), RASTER_ROW_CHUNK):
        rows = ys[start:start + RASTER_ROW_CHUNK, None]                     # (r, 1)
        crosses = (y1[None, :] > rows) != (y2[None, :] > rows)              # (r, e)
        x_cross = x1[None, :] + (rows - y1[None, :]) * (x2 - x1)[None, :] / safe_dy[None, :]
        hits = crosses[:, :, None] & (xs[None, None, :] < x_cross[:, :, None])
        mask[start:start + RASTER_ROW_CHUNK] = (hits.sum(axis=1) % 2) == 1
    return mask


def rasterize_iou(a: Polygon, b: Polygon, grid: int = 1024) -> float:
    """
    IoU estimated on a grid × grid lattice of pixel centers spanning the joint
    bounding box of both polygons
    """
    if grid < 64:
        raise ValueError(f"rasterize_iou needs grid >= 64, got {grid}")

    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    x0, y0 = min(ax0, bx0), min(ay0, by0)
    x1, y1 = max(ax1, bx1), max(ay1, by1)

    xs = x0 + (np.arange(grid) + 0.5) * (x1 - x0) / grid
    ys = y0 + (np.arange(grid) + 0.5) * (y1 - y0) / grid

    mask_a = _even_odd_mask(a.vertices, xs, ys)
    mask_b = _even_odd_mask(b.vertices, xs, ys)

    union = np.count_nonzero(mask_a | mask_b)
    if union == 0:
        return 0.0
    return float(np.count_nonzero(mask_a & mask_b) / union)


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    """IoU of two (xmin, ymin, xmax, ymax) boxes in continuous coordinates"""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    return float(inter / union) if union > 0 else 0.0
