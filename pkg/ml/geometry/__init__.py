"""
Geometry core: points, chains, polygons and IoU
"""

from .primitives import GeometryError, Point2, PolyChain, Polygon, signed_area, similarity_transform
from .chain_ops import (
    ChainSamples,
    arc_length_sample,
    hausdorff_distance,
    insert_collinear_vertices,
    project_points,
    project_to_chain,
    resample_chain,
    segment_projection,
)
from .iou import box_iou, polygon_iou, rasterize_iou

__all__ = [
    'GeometryError', 'Point2', 'PolyChain', 'Polygon', 'signed_area', 'similarity_transform',
    'ChainSamples', 'arc_length_sample', 'hausdorff_distance', 'insert_collinear_vertices',
    'project_points', 'project_to_chain', 'resample_chain', 'segment_projection',
    'box_iou', 'polygon_iou', 'rasterize_iou',
]
