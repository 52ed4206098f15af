"""
Detection post-processing
Soft-NMS over axis-aligned boxes and hard NMS over tube envelopes
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Dict, List, Sequence, Tuple

from ml.geometry import Polygon, box_iou, polygon_iou
from ml.medial import FIT_CAP_STYLE, EnvelopeError, Tube, tube_envelope

logger = logging.getLogger(__name__)

SOFT_NMS_METHODS = ('gaussian', 'linear')


@dataclass(frozen=True)
class BoxDetection:
    """Axis-aligned box (xmin, ymin, xmax, ymax) with a confidence score"""
    box: Tuple[float, float, float, float]
    score: float
    detection_id: int = 0
    image_id: str = ''

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.box
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"Detection {self.detection_id}: degenerate box {self.box}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"Detection {self.detection_id}: score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class TubeDetection:
    tube: Tube
    score: float
    image_id: str = ''
    detection_id: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"Detection {self.detection_id}: score {self.score} outside [0, 1]")

    def envelope(self, cap_segments: int = 8, cap_style: str = FIT_CAP_STYLE) -> Polygon:
        try:
            return tube_envelope(self.tube, cap_segments, cap_style)
        except EnvelopeError as e:
            raise EnvelopeError(f"Detection {self.detection_id} on {self.image_id!r}: {e}") from e

    def bounding_box(self) -> Tuple[float, float, float, float]:
        pts = self.tube.axis.points
        r = self.tube.radius
        return (float(pts[:, 0].min() - r), float(pts[:, 1].min() - r),
                float(pts[:, 0].max() + r), float(pts[:, 1].max() + r))


def _rank_key(det) -> Tuple[float, int]:
    return (-det.score, det.detection_id)


def soft_nms(dets: Sequence[BoxDetection], iou_thr: float = 0.5, decay_sigma: float = 0.5,
             score_floor: float = 0.001, method: str = 'gaussian') -> List[BoxDetection]:
    """
    Soft-NMS: repeatedly select the best-scoring box and decay the scores of
    remaining boxes overlapping it by more than iou_thr

    Gaussian decay multiplies by exp(-IoU^2 / decay_sigma); linear decay by
    (1 - IoU). Boxes decayed below score_floor are dropped. Output is sorted by
    score, ties by detection id.
    """
    if method not in SOFT_NMS_METHODS:
        raise ValueError(f"Unknown soft-NMS method {method!r}; expected one of {SOFT_NMS_METHODS}")

    remaining = list(dets)
    kept: List[BoxDetection] = []

    while remaining:
        best = min(range(len(remaining)), key=lambda i: _rank_key(remaining[i]))
        selected = remaining.pop(best)
        kept.append(selected)

        survivors = []
        for det in remaining:
            iou = box_iou(selected.box, det.box)
            if iou > iou_thr:
                factor = math.exp(-(iou ** 2) / decay_sigma) if method == 'gaussian' else 1.0 - iou
                det = replace(det, score=det.score * factor)
                if det.score < score_floor:
                    logger.debug(f"Soft-NMS dropped detection {det.detection_id} (score {det.score:.4g})")
                    continue
            survivors.append(det)
        remaining = survivors

    return sorted(kept, key=_rank_key)


def _group_by_image(dets: Sequence) -> Dict[str, List]:
    groups: Dict[str, List] = OrderedDict()
    for det in dets:
        groups.setdefault(det.image_id, []).append(det)
    return groups


def polygonal_nms(dets: Sequence[TubeDetection], iou_thr: float = 0.5, cap_segments: int = 8,
                  cap_style: str = FIT_CAP_STYLE) -> List[TubeDetection]:
    """
    Hard NMS on tube envelopes, per image: in descending score order a
    detection is kept iff its envelope IoU with every kept envelope is <= iou_thr

    Raises:
        EnvelopeError: a detection's envelope cannot be built (names the detection)
    """
    kept: List[TubeDetection] = []
    for image_id, group in _group_by_image(dets).items():
        kept_envelopes: List[Polygon] = []
        for det in sorted(group, key=_rank_key):
            env = det.envelope(cap_segments, cap_style)
            if all(polygon_iou(env, other) <= iou_thr for other in kept_envelopes):
                kept.append(det)
                kept_envelopes.append(env)
            else:
                logger.debug(f"Polygonal NMS suppressed detection {det.detection_id} on {image_id!r}")
    return sorted(kept, key=_rank_key)
