"""
Medial-axis extraction for annotation polygons

Pipeline:
1. Resample the polygon boundary densely
2. Build the interior Voronoi graph of the boundary samples
3. Prune leaf branches with low clearance
4. Keep the longest leaf-to-leaf path (the pruned chain)
5. Extend the terminal segments to the boundary
6. Resample to n_points medial points

A fast path reads the axis directly off paired-chain annotations (top chain
followed by the reversed bottom chain).
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import networkx as nx
import numpy as np
import shapely
from scipy.spatial import Voronoi
from shapely.geometry import LineString

from ml.geometry import GeometryError, PolyChain, Polygon, resample_chain

logger = logging.getLogger(__name__)

CURVED = 'curved'
STRAIGHT = 'straight'
CAP_STYLES = ('round', 'flat')
# envelope caps when comparing fitted tubes with annotation polygons
FIT_CAP_STYLE = 'flat'
SIMPLIFY_CLEARANCE_FRACTION = 0.02


class MedialAxisError(ValueError):
    """Raised when no usable medial axis can be extracted from a polygon"""


@dataclass(frozen=True)
class MedialConfig:
    """Settings for medial-axis extraction, tube fitting and envelopes"""
    n_points: int = 5
    boundary_sample_spacing: Optional[float] = None  # None = min(bbox side) / 50
    prune_clearance_fraction: float = 0.5
    cap_segments: int = 8
    radius_samples: int = 100
    use_paired_midpoints: bool = False
    envelope_cap_style: str = FIT_CAP_STYLE
    max_boundary_samples: int = 20000
    curvature_threshold: float = 0.1

    def __post_init__(self):
        if self.n_points < 4:
            raise ValueError(f"n_points must be >= 4, got {self.n_points}")
        if not 0.0 < self.prune_clearance_fraction < 1.0:
            raise ValueError(f"prune_clearance_fraction must be in (0, 1), got {self.prune_clearance_fraction}")
        if self.boundary_sample_spacing is not None and self.boundary_sample_spacing <= 0:
            raise ValueError(f"boundary_sample_spacing must be > 0, got {self.boundary_sample_spacing}")
        if self.cap_segments < 1:
            raise ValueError(f"cap_segments must be >= 1, got {self.cap_segments}")
        if self.radius_samples < 2:
            raise ValueError(f"radius_samples must be >= 2, got {self.radius_samples}")
        if self.envelope_cap_style not in CAP_STYLES:
            raise ValueError(f"envelope_cap_style must be one of {CAP_STYLES}, got {self.envelope_cap_style!r}")
        if self.max_boundary_samples < 16:
            raise ValueError(f"max_boundary_samples must be >= 16, got {self.max_boundary_samples}")
        if self.curvature_threshold < 0:
            raise ValueError(f"curvature_threshold must be >= 0, got {self.curvature_threshold}")


def boundary_spacing(poly: Polygon, cfg: MedialConfig) -> float:
    """Boundary sample spacing, raised if the sample budget would be exceeded"""
    if cfg.boundary_sample_spacing is not None:
        spacing = cfg.boundary_sample_spacing
    else:
        x0, y0, x1, y1 = poly.bounds
        spacing = min(x1 - x0, y1 - y0) / 50.0

    budget_spacing = poly.perimeter / cfg.max_boundary_samples
    if spacing < budget_spacing:
        logger.warning(
            f"Boundary spacing {spacing:.4g} exceeds the sample budget "
            f"({cfg.max_boundary_samples}); using {budget_spacing:.4g}"
        )
        spacing = budget_spacing
    return spacing


def resample_boundary(poly: Polygon, spacing: float) -> np.ndarray:
    """Points along every polygon edge, at most `spacing` apart, vertices included"""
    verts = poly.vertices
    nxt = np.roll(verts, -1, axis=0)
    chunks = []
    for a, b in zip(verts, nxt):
        n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
        f = np.arange(n, dtype=float)[:, None] / n
        chunks.append(a + f * (b - a))
    return np.vstack(chunks)


def merge_coincident(vertices: np.ndarray, poly: Polygon, spacing: float) -> np.ndarray:
    """
    Canonical index per Voronoi vertex, merging vertices that co-circular
    samples place at the same spot. Only vertices inside the polygon's
    bounding box are keyed; the rest keep their own index.
    """
    canonical = np.arange(len(vertices))
    x0, y0, x1, y1 = poly.bounds
    origin = np.array([x0, y0])
    near = np.all(np.isfinite(vertices), axis=1)
    near[near] = np.all((vertices[near] >= origin) & (vertices[near] <= (x1, y1)), axis=1)
    idx = np.flatnonzero(near)
    if len(idx) == 0:
        return canonical

    key = np.round((vertices[idx] - origin) / (spacing * 1e-6)).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    canonical[idx] = idx[first[np.asarray(inverse).reshape(-1)]]
    return canonical


def _medial_graph(poly: Polygon, samples: np.ndarray, spacing: float) -> nx.Graph:
    """Interior Voronoi ridges of the boundary samples as a weighted graph"""
    vor = Voronoi(samples)
    canonical = merge_coincident(vor.vertices, poly, spacing)

    ridges = np.array([r for r in vor.ridge_vertices if r[0] >= 0 and r[1] >= 0], dtype=np.int64)
    if len(ridges) == 0:
        raise MedialAxisError("Voronoi diagram of the boundary has no finite ridges")

    ridges = ridges[canonical[ridges[:, 0]] != canonical[ridges[:, 1]]]
    coords = vor.vertices[ridges]                               # (R, 2, 2)
    lines = shapely.linestrings(coords)
    inside = shapely.contains(poly.shape, lines)

    graph = nx.Graph()
    for (i, j), seg in zip(ridges[inside], coords[inside]):
        a, b = int(canonical[i]), int(canonical[j])
        graph.add_edge(a, b, weight=float(np.hypot(*(seg[1] - seg[0]))))
        graph.nodes[a]['xy'] = seg[0]
        graph.nodes[b]['xy'] = seg[1]
    return graph


def _node_xy(graph: nx.Graph, nodes) -> np.ndarray:
    return np.array([graph.nodes[n]['xy'] for n in nodes], dtype=float).reshape(-1, 2)


def _leaf_branch(tree: nx.Graph, leaf) -> Optional[List]:
    """Nodes from a leaf up to (excluding) the first junction, None if no junction"""
    path = [leaf]
    prev, cur = None, leaf
    while True:
        nbrs = [n for n in tree.neighbors(cur) if n != prev]
        if not nbrs:
            return None
        prev, cur = cur, nbrs[0]
        if tree.degree(cur) >= 3:
            return path
        if tree.degree(cur) == 1:
            return None
        path.append(cur)


def _prune_leaves(tree: nx.Graph, clearance: Dict, fraction: float) -> nx.Graph:
    threshold = fraction * max(clearance[n] for n in tree.nodes)
    tree = tree.copy()
    passes = 0

    while True:
        leaves = [n for n in tree.nodes if tree.degree(n) == 1]
        if len(leaves) <= 2:
            break

        doomed = []
        for leaf in leaves:
            if clearance[leaf] >= threshold:
                continue
            branch = _leaf_branch(tree, leaf)
            if branch is not None:
                doomed.extend(branch)

        if not doomed:
            break
        tree.remove_nodes_from(doomed)
        passes += 1

    logger.debug(f"Pruning finished after {passes} passes, {tree.number_of_nodes()} nodes left")
    return tree


def _longest_path(tree: nx.Graph) -> List:
    start = next(iter(tree.nodes))
    dist = nx.single_source_dijkstra_path_length(tree, start, weight='weight')
    a = max(dist, key=dist.get)
    dist, paths = nx.single_source_dijkstra(tree, a, weight='weight')
    b = max(dist, key=dist.get)
    return paths[b]


def _canonical_direction(points: np.ndarray) -> np.ndarray:
    """Orient chains left to right (then bottom to top)"""
    start, end = points[0], points[-1]
    if end[0] < start[0] or (end[0] == start[0] and end[1] < start[1]):
        return points[::-1].copy()
    return points


def pruned_medial_chain(poly: Polygon, cfg: MedialConfig = MedialConfig()) -> PolyChain:
    """
    Pre-extension medial chain: Voronoi graph, clearance pruning and the
    longest remaining path, simplified at a small fraction of its clearance

    Raises:
        MedialAxisError: polygon too thin for the spacing, or pruning empties the graph
    """
    spacing = boundary_spacing(poly, cfg)
    samples = resample_boundary(poly, spacing)
    graph = _medial_graph(poly, samples, spacing)

    if graph.number_of_nodes() < 2:
        raise MedialAxisError(
            f"Polygon too thin for boundary spacing {spacing:.4g}; use a finer boundary_sample_spacing"
        )

    component = max(nx.connected_components(graph), key=len)
    graph = graph.subgraph(component).copy()
    tree = nx.minimum_spanning_tree(graph, weight='weight')

    nodes = list(tree.nodes)
    dist = poly.boundary_distance(_node_xy(tree, nodes))
    clearance = dict(zip(nodes, dist.tolist()))

    if len(nodes) < 2 or max(clearance.values()) < spacing:
        raise MedialAxisError(
            f"Polygon too thin for boundary spacing {spacing:.4g}; use a finer boundary_sample_spacing"
        )

    pruned = _prune_leaves(tree, clearance, cfg.prune_clearance_fraction)
    if pruned.number_of_nodes() < 2:
        raise MedialAxisError("Branch pruning emptied the medial graph")

    path = _longest_path(pruned)
    if len(path) < 2:
        raise MedialAxisError("Branch pruning emptied the medial graph")

    coords = _node_xy(pruned, path)
    tolerance = SIMPLIFY_CLEARANCE_FRACTION * min(clearance[n] for n in path)
    simplified = np.asarray(LineString(coords).simplify(tolerance, preserve_topology=False).coords)
    if len(simplified) < 2 or np.hypot(*(simplified[-1] - simplified[0])) == 0:
        simplified = coords[[0, -1]]

    try:
        return PolyChain(_canonical_direction(simplified))
    except GeometryError as e:
        raise MedialAxisError(f"Degenerate medial chain: {e}") from e


def _ray_hit(origin: np.ndarray, direction: np.ndarray, poly: Polygon) -> np.ndarray:
    x0, y0, x1, y1 = poly.bounds
    reach = 2.0 * float(np.hypot(x1 - x0, y1 - y0)) + 1.0
    ray = LineString([origin, origin + direction * reach])
    hits = shapely.get_coordinates(ray.intersection(poly.shape.exterior))
    if len(hits) == 0:
        raise MedialAxisError(f"Extension ray from {origin.tolist()} does not reach the boundary")
    d = np.hypot(hits[:, 0] - origin[0], hits[:, 1] - origin[1])
    return hits[int(np.argmin(d))]


def _end_direction(points: np.ndarray, look_back: float) -> np.ndarray:
    """Unit direction from the point look_back behind the last point (in arc length) to the last point"""
    seg = np.hypot(*np.diff(points[::-1], axis=0).T)
    behind = np.concatenate(([0.0], np.cumsum(seg)))
    s = min(look_back, behind[-1])
    anchor = np.array([np.interp(s, behind, points[::-1, k]) for k in range(2)])
    d = points[-1] - anchor
    if np.hypot(*d) == 0:
        d = points[-1] - points[-2]
    return d / np.hypot(*d)


def extend_to_boundary(chain: PolyChain, poly: Polygon) -> PolyChain:
    """
    Move both chain endpoints onto the polygon boundary along the end
    direction, taken over one endpoint clearance of arc length
    """
    pts = chain.points.copy()
    reach = poly.boundary_distance(pts[[0, -1]])

    head = _end_direction(pts[::-1], float(reach[0]))
    tail = _end_direction(pts, float(reach[1]))
    pts[0] = _ray_hit(pts[0], head, poly)
    pts[-1] = _ray_hit(pts[-1], tail, poly)

    try:
        extended = PolyChain(pts)
    except GeometryError as e:
        raise MedialAxisError(f"End extension produced a degenerate chain: {e}") from e
    if not extended.is_simple():
        raise MedialAxisError("End extension makes the medial chain self-intersecting")
    return extended


def extract_medial_axis(poly: Polygon, cfg: MedialConfig = MedialConfig()) -> PolyChain:
    """Medial axis with n_points uniform medial points, endpoints on the boundary"""
    pruned = pruned_medial_chain(poly, cfg)
    extended = extend_to_boundary(pruned, poly)
    return resample_chain(extended, cfg.n_points)


def paired_midpoint_axis(poly: Polygon) -> PolyChain:
    """
    Midpoints of paired vertices (i, 2k-1-i) of a 2k-vertex polygon given as a
    top chain followed by the reversed bottom chain
    """
    verts = poly.vertices
    if len(verts) % 2:
        raise MedialAxisError(f"Paired midpoint axis needs an even vertex count, got {len(verts)}")
    k = len(verts) // 2
    mids = 0.5 * (verts[:k] + verts[::-1][:k])
    try:
        return PolyChain(_canonical_direction(mids))
    except GeometryError as e:
        raise MedialAxisError(f"Paired midpoints are degenerate: {e}") from e


def paired_half_widths(poly: Polygon) -> np.ndarray:
    """Half distances between paired vertices"""
    verts = poly.vertices
    if len(verts) % 2:
        raise MedialAxisError(f"Paired half widths need an even vertex count, got {len(verts)}")
    k = len(verts) // 2
    gap = verts[:k] - verts[::-1][:k]
    return 0.5 * np.hypot(gap[:, 0], gap[:, 1])


def max_angle_difference(axis: PolyChain) -> float:
    """Largest pairwise segment-angle difference modulo pi, in [0, pi/2]"""
    angles = axis.segment_angles[axis.segment_lengths > 0]
    if len(angles) < 2:
        return 0.0
    diff = np.abs(angles[:, None] - angles[None, :]) % np.pi
    diff = np.minimum(diff, np.pi - diff)
    return float(diff.max())


def classify_curvature(axis: PolyChain, threshold: float = 0.1) -> str:
    """'curved' iff two distinct segments differ in angle by more than threshold"""
    return CURVED if max_angle_difference(axis) > threshold + 1e-12 else STRAIGHT
