"""
Tube model (medial chain + constant radius) and fitting to annotation polygons
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ml.geometry import PolyChain, Polygon, arc_length_sample, resample_chain
from .medial_axis import (
    MedialAxisError,
    MedialConfig,
    extend_to_boundary,
    paired_half_widths,
    paired_midpoint_axis,
    pruned_medial_chain,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tube:
    """Polygonal medial axis with a constant radius"""
    axis: PolyChain
    radius: float

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise ValueError(f"Tube radius must be finite and > 0, got {self.radius}")

    @property
    def n_points(self) -> int:
        return self.axis.n_points

    def transformed(self, rotation: float = 0.0, scale: float = 1.0, offset=(0.0, 0.0)) -> 'Tube':
        return Tube(self.axis.transformed(rotation, scale, offset), self.radius * scale)

    def to_dict(self) -> Dict[str, Any]:
        return {'points': self.axis.to_list(), 'radius': float(self.radius)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], strict: bool = False) -> 'Tube':
        return cls(PolyChain(data['points'], strict=strict), float(data['radius']))


@dataclass(frozen=True)
class TubeFit:
    """Fitted tube plus the intermediate pruned axis and clearance profile"""
    tube: Tube
    pruned_axis: PolyChain
    radius_profile: np.ndarray
    method: str  # 'voronoi' or 'paired'

    @property
    def radius_variation(self) -> float:
        return relative_variation(self.radius_profile)


def clearance_profile(poly: Polygon, pruned_axis: PolyChain, m: int) -> np.ndarray:
    """
    Boundary distance at m uniform arc-length samples of the pre-extension axis

    Raises:
        MedialAxisError: a sample lies outside the polygon or on its boundary
    """
    samples = arc_length_sample(pruned_axis, m).points
    inside = poly.contains_points(samples)
    clearance = poly.boundary_distance(samples)
    if not np.all(inside) or np.any(clearance <= 0):
        bad = int(np.flatnonzero(~inside | (clearance <= 0))[0])
        raise MedialAxisError(
            f"Axis sample {bad} has zero clearance; estimate the radius before end extension"
        )
    return clearance


def relative_variation(profile: np.ndarray) -> float:
    mean = float(np.mean(profile))
    return float((np.max(profile) - np.min(profile)) / mean) if mean > 0 else 0.0


def estimate_radius(poly: Polygon, pruned_axis: PolyChain, m: int = 100) -> float:
    """Mean clearance over m uniform samples of the pre-extension axis"""
    return float(np.mean(clearance_profile(poly, pruned_axis, m)))


def radius_variation(poly: Polygon, pruned_axis: PolyChain, m: int = 100) -> float:
    """(max - min) / mean clearance along the pre-extension axis"""
    return relative_variation(clearance_profile(poly, pruned_axis, m))


def _fit_paired(poly: Polygon, cfg: MedialConfig) -> TubeFit:
    axis = paired_midpoint_axis(poly)
    half = paired_half_widths(poly)
    tube = Tube(resample_chain(axis, cfg.n_points), float(np.mean(half)))
    return TubeFit(tube=tube, pruned_axis=axis, radius_profile=half, method='paired')


def _fit_voronoi(poly: Polygon, cfg: MedialConfig) -> TubeFit:
    pruned = pruned_medial_chain(poly, cfg)
    profile = clearance_profile(poly, pruned, cfg.radius_samples)
    axis = resample_chain(extend_to_boundary(pruned, poly), cfg.n_points)
    return TubeFit(tube=Tube(axis, float(np.mean(profile))), pruned_axis=pruned, radius_profile=profile, method='voronoi')


def fit_tube_detailed(poly: Polygon, cfg: MedialConfig = MedialConfig()) -> TubeFit:
    """Fit a tube and keep the pruned axis and clearance profile"""
    if cfg.use_paired_midpoints and poly.n_vertices % 2 == 0:
        try:
            return _fit_paired(poly, cfg)
        except ValueError as e:
            logger.debug(f"Paired fast path failed ({e}); falling back to Voronoi extraction")
    return _fit_voronoi(poly, cfg)


def fit_tube(poly: Polygon, cfg: MedialConfig = MedialConfig()) -> Tube:
    """
    Fit a tube to an annotation polygon

    The radius is averaged over the pre-extension axis; the returned axis is
    extended to the boundary and resampled to cfg.n_points.
    """
    return fit_tube_detailed(poly, cfg).tube
