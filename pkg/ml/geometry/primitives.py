"""
Geometry primitives: points, polygonal chains and simple polygons

All coordinates are real-valued pixels. Integer annotation inputs are widened
to float on construction. Instances are immutable (arrays are read-only).
"""

import logging
from typing import List, NamedTuple, Sequence

import numpy as np
import shapely
from shapely.geometry import LineString
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.validation import explain_validity

logger = logging.getLogger(__name__)


class GeometryError(ValueError):
    """Raised for chains or polygons that violate their invariants"""


class Point2(NamedTuple):
    x: float
    y: float


def _as_points(points, min_count: int, what: str) -> np.ndarray:
    arr = np.array(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"{what} needs an (n, 2) coordinate list, got shape {arr.shape}")
    if len(arr) < min_count:
        raise GeometryError(f"{what} needs at least {min_count} points, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{what} has non-finite coordinates")
    return arr


class PolyChain:
    """
    Ordered polygonal chain (medial axis representation)

    Args:
        points: (n, 2) coordinates, n >= 2
        strict: Reject consecutive identical points. Predicted chains may pass
            strict=False, in which case only a positive total length is required.
    """

    def __init__(self, points, strict: bool = True):
        pts = _as_points(points, 2, 'PolyChain')
        deltas = np.diff(pts, axis=0)
        lengths = np.hypot(deltas[:, 0], deltas[:, 1])

        if strict and np.any(lengths == 0):
            bad = int(np.flatnonzero(lengths == 0)[0])
            raise GeometryError(f"PolyChain has identical consecutive points at index {bad}")
        if lengths.sum() <= 0:
            raise GeometryError("PolyChain has zero total length")

        cumulative = np.concatenate(([0.0], np.cumsum(lengths)))
        for arr in (pts, lengths, cumulative):
            arr.setflags(write=False)

        self._points = pts
        self._lengths = lengths
        self._cumulative = cumulative
        self.strict = strict

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n_points(self) -> int:
        return len(self._points)

    @property
    def n_segments(self) -> int:
        return len(self._points) - 1

    @property
    def segment_lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def cumulative_lengths(self) -> np.ndarray:
        """Arc length at each vertex, starting at 0"""
        return self._cumulative

    @property
    def length(self) -> float:
        return float(self._cumulative[-1])

    @property
    def segment_angles(self) -> np.ndarray:
        deltas = np.diff(self._points, axis=0)
        return np.arctan2(deltas[:, 1], deltas[:, 0])

    @property
    def start(self) -> Point2:
        return Point2(*self._points[0])

    @property
    def end(self) -> Point2:
        return Point2(*self._points[-1])

    def reversed(self) -> 'PolyChain':
        return PolyChain(self._points[::-1], strict=self.strict)

    def transformed(self, rotation: float = 0.0, scale: float = 1.0, offset=(0.0, 0.0)) -> 'PolyChain':
        """Rotate about the origin, scale uniformly, then translate"""
        return PolyChain(similarity_transform(self._points, rotation, scale, offset), strict=self.strict)

    def as_linestring(self) -> LineString:
        return LineString(self._points)

    def is_simple(self) -> bool:
        return bool(self.as_linestring().is_simple)

    def to_list(self) -> List[List[float]]:
        return self._points.tolist()

    def __len__(self) -> int:
        return len(self._points)

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyChain) and np.array_equal(self._points, other._points)

    def __hash__(self):
        return hash(self._points.tobytes())

    def __repr__(self) -> str:
        return f"PolyChain(n={self.n_points}, length={self.length:.3f})"


def signed_area(vertices: np.ndarray) -> float:
    """Shoelace area, positive for counter-clockwise vertex order"""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Polygon:
    """
    Simple polygon bounding one text instance, stored counter-clockwise

    Validity (no self-intersection, positive area) is checked at construction;
    invalid annotations are rejected rather than repaired. Canonicalization
    reverses the vertex list, which keeps the (i, 2k-1-i) vertex pairing of
    paired-chain annotations intact.

    Args:
        vertices: (k, 2) coordinates, k >= 3; a repeated closing vertex is dropped
    """

    def __init__(self, vertices):
        pts = _as_points(vertices, 3, 'Polygon')
        if len(pts) > 3 and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < 3:
            raise GeometryError("Polygon needs at least 3 distinct vertices")

        shape = ShapelyPolygon(pts)
        if not shape.is_valid:
            raise GeometryError(f"Polygon is not simple: {explain_validity(shape)}")

        area = signed_area(pts)
        if abs(area) <= 0.0 or shape.area <= 0.0:
            raise GeometryError("Polygon has zero area")
        if area < 0:
            pts = pts[::-1].copy()
            shape = ShapelyPolygon(pts)

        pts.setflags(write=False)
        shapely.prepare(shape)
        self._vertices = pts
        self._shape = shape
        self._area = abs(area)

    @classmethod
    def from_flat(cls, coords: Sequence[float]) -> 'Polygon':
        """Build from [x1, y1, ..., xk, yk]"""
        if len(coords) % 2:
            raise GeometryError(f"Odd coordinate count ({len(coords)})")
        return cls(np.asarray(coords, dtype=float).reshape(-1, 2))

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    @property
    def area(self) -> float:
        return self._area

    @property
    def shape(self) -> ShapelyPolygon:
        """Backing shapely polygon (prepared)"""
        return self._shape

    @property
    def bounds(self):
        return self._shape.bounds

    @property
    def perimeter(self) -> float:
        return float(self._shape.exterior.length)

    def contains_points(self, points) -> np.ndarray:
        """Strict interior test for an (n, 2) array"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return shapely.contains_xy(self._shape, pts[:, 0], pts[:, 1])

    def boundary_distance(self, points) -> np.ndarray:
        """Distance from each point of an (n, 2) array to the polygon boundary"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return shapely.distance(self._shape.exterior, shapely.points(pts))

    def transformed(self, rotation: float = 0.0, scale: float = 1.0, offset=(0.0, 0.0)) -> 'Polygon':
        return Polygon(similarity_transform(self._vertices, rotation, scale, offset))

    def to_list(self) -> List[List[float]]:
        return self._vertices.tolist()

    def __repr__(self) -> str:
        return f"Polygon(n={self.n_vertices}, area={self.area:.3f})"


def similarity_transform(points, rotation: float = 0.0, scale: float = 1.0, offset=(0.0, 0.0)) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    c, s = np.cos(rotation), np.sin(rotation)
    rot = np.array([[c, -s], [s, c]])
    return scale * pts @ rot.T + np.asarray(offset, dtype=float)
