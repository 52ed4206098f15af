"""
Dataset statistics over annotation polygons
Curvature split, maximal segment-angle and radius-variation histograms, and
how well a fixed-radius tube covers each instance
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from tqdm import tqdm

from ml.geometry import GeometryError, polygon_iou
from ml.medial import (
    CURVED,
    MedialConfig,
    classify_curvature,
    fit_tube_detailed,
    max_angle_difference,
    tube_envelope,
)
from services.annotation_service import AnnotationRecord

logger = logging.getLogger(__name__)

ANGLE_BINS = 16
ANGLE_RANGE = (0.0, math.pi / 2.0)
VARIATION_BINS = 20
VARIATION_RANGE = (0.0, 1.0)
LOW_VARIATION = 0.2


@dataclass
class DatasetStats:
    n_instances: int = 0
    n_curved: int = 0
    n_straight: int = 0
    n_failed: int = 0
    curvature_histogram: List[int] = field(default_factory=lambda: [0] * ANGLE_BINS)
    curvature_bin_edges: List[float] = field(
        default_factory=lambda: np.linspace(*ANGLE_RANGE, ANGLE_BINS + 1).tolist())
    radius_variation_histogram: List[int] = field(default_factory=lambda: [0] * VARIATION_BINS)
    radius_variation_bin_edges: List[float] = field(
        default_factory=lambda: np.linspace(*VARIATION_RANGE, VARIATION_BINS + 1).tolist())
    mean_radius_variation: float = 0.0
    fraction_low_variation: float = 0.0
    mean_fixed_radius_iou: float = 0.0

    def to_dict(self) -> Dict:
        return asdict(self)


def dataset_stats(records: Sequence[AnnotationRecord], medial_cfg: MedialConfig = MedialConfig(),
                  show_progress: bool = False) -> DatasetStats:
    """
    Fit a tube per record and summarize curvature and radius variation

    Records whose fit fails are skipped and counted in n_failed.
    """
    angles: List[float] = []
    variations: List[float] = []
    ious: List[float] = []
    n_curved = 0
    n_failed = 0

    for record in tqdm(records, desc='Fitting tubes', disable=not show_progress):
        try:
            poly = record.to_polygon()
            fit = fit_tube_detailed(poly, medial_cfg)
            envelope = tube_envelope(fit.tube, medial_cfg.cap_segments, medial_cfg.envelope_cap_style)
        except (ValueError, GeometryError) as e:
            logger.warning(f"Skipping instance of {record.image_id!r}: {e}")
            n_failed += 1
            continue

        angles.append(max_angle_difference(fit.tube.axis))
        variations.append(fit.radius_variation)
        ious.append(polygon_iou(envelope, poly))
        if classify_curvature(fit.tube.axis, medial_cfg.curvature_threshold) == CURVED:
            n_curved += 1

    stats = DatasetStats(n_failed=n_failed)
    if not angles:
        return stats

    stats.n_instances = len(angles)
    stats.n_curved = n_curved
    stats.n_straight = len(angles) - n_curved
    stats.curvature_histogram = np.histogram(
        np.clip(angles, *ANGLE_RANGE), bins=ANGLE_BINS, range=ANGLE_RANGE)[0].tolist()
    stats.radius_variation_histogram = np.histogram(
        np.clip(variations, *VARIATION_RANGE), bins=VARIATION_BINS, range=VARIATION_RANGE)[0].tolist()
    stats.mean_radius_variation = float(np.mean(variations))
    stats.fraction_low_variation = float(np.mean(np.asarray(variations) <= LOW_VARIATION))
    stats.mean_fixed_radius_iou = float(np.mean(ious))

    logger.info(
        f"Dataset stats: {stats.n_instances} instances ({stats.n_curved} curved), {n_failed} failed"
    )
    return stats
