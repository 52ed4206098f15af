"""
Polygonal PASCAL-VOC evaluation
Greedy matching, precision/recall curves, AP, maximum F-score and
curved/straight subset recall
"""

import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ml.geometry import GeometryError, Polygon, polygon_iou
from ml.medial import CURVED, STRAIGHT, MedialConfig, classify_curvature, fit_tube

logger = logging.getLogger(__name__)

AP_METHODS = ('all-points', '11-point')


class EvaluationError(ValueError):
    """Raised for evaluations without ground truth to score against"""


@dataclass(frozen=True)
class GroundTruthInstance:
    image_id: str
    polygon: Polygon
    subset_label: Optional[str] = None  # 'curved', 'straight' or None if the fit failed


@dataclass(frozen=True)
class EvalDetection:
    """Detection region for matching; polygon None means its envelope failed"""
    image_id: str
    polygon: Optional[Polygon]
    score: float
    detection_id: int = 0


@dataclass(frozen=True)
class MatchLabel:
    score: float
    is_tp: bool
    detection_id: int
    gt_index: Optional[int] = None
    iou: float = 0.0


@dataclass
class EvalReport:
    pr_points: List[Tuple[float, float]] = field(default_factory=list)  # (precision, recall)
    average_precision: float = 0.0
    max_f: float = 0.0
    p_at_max_f: float = 0.0
    r_at_max_f: float = 0.0
    n_gt: int = 0
    n_det: int = 0
    n_tp: int = 0
    curved_recall: Optional[float] = None
    straight_recall: Optional[float] = None
    n_curved: int = 0
    n_straight: int = 0

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['pr_points'] = [list(p) for p in self.pr_points]
        return data


def f_score(precision: float, recall: float) -> float:
    """Harmonic mean 2PR / (P + R), 0 when both are 0"""
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def label_ground_truth(image_ids: Sequence[str], polygons: Sequence[Polygon],
                       medial_cfg: MedialConfig = MedialConfig()) -> List[GroundTruthInstance]:
    """Attach curved/straight labels from each polygon's fitted medial axis"""
    instances = []
    for image_id, poly in zip(image_ids, polygons):
        try:
            label = classify_curvature(fit_tube(poly, medial_cfg).axis, medial_cfg.curvature_threshold)
        except (ValueError, GeometryError) as e:
            logger.warning(f"Could not fit a tube to a ground truth of {image_id!r}: {e}; no subset label")
            label = None
        instances.append(GroundTruthInstance(image_id=image_id, polygon=poly, subset_label=label))
    return instances


def match_detections(dets: Sequence[EvalDetection], gts: Sequence[GroundTruthInstance],
                     iou_thr: float = 0.5) -> List[MatchLabel]:
    """
    Greedy matching in descending score order (stable on input order)

    Each detection takes the highest-IoU unmatched ground truth of its image
    and is a true positive iff that IoU is strictly above iou_thr.
    """
    by_image: Dict[str, List[int]] = defaultdict(list)
    for index, gt in enumerate(gts):
        by_image[gt.image_id].append(index)

    matched = set()
    labels: List[MatchLabel] = []
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)

    for i in order:
        det = dets[i]
        candidates = by_image.get(det.image_id)
        if candidates is None:
            logger.warning(f"Detection {det.detection_id} refers to unknown image {det.image_id!r}; counted as FP")
            labels.append(MatchLabel(det.score, False, det.detection_id))
            continue
        if det.polygon is None:
            labels.append(MatchLabel(det.score, False, det.detection_id))
            continue

        best_iou, best_gt = 0.0, None
        for g in candidates:
            if g in matched:
                continue
            iou = polygon_iou(det.polygon, gts[g].polygon)
            if iou > best_iou:
                best_iou, best_gt = iou, g

        if best_gt is not None and best_iou > iou_thr:
            matched.add(best_gt)
            labels.append(MatchLabel(det.score, True, det.detection_id, best_gt, best_iou))
        else:
            labels.append(MatchLabel(det.score, False, det.detection_id, None, best_iou))

    return labels


def voc_ap(recall: np.ndarray, precision: np.ndarray, method: str = 'all-points') -> float:
    """Area under the PR curve, all-points interpolation or the 11-point variant"""
    if method == '11-point':
        ap = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            above = recall >= t - 1e-12
            ap += (np.max(precision[above]) if np.any(above) else 0.0) / 11.0
        return float(ap)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    i = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[i + 1] - mrec[i]) * mpre[i + 1]))


def pr_curve(labels: Sequence[MatchLabel], n_gt: int, ap_method: str = 'all-points') -> EvalReport:
    """
    Precision/recall down the score ranking with AP and the max-F operating point

    Raises:
        EvaluationError: n_gt is 0
    """
    if n_gt < 1:
        raise EvaluationError("Cannot build a PR curve without ground truths (n_gt = 0)")
    if ap_method not in AP_METHODS:
        raise ValueError(f"Unknown AP method {ap_method!r}; expected one of {AP_METHODS}")

    report = EvalReport(n_gt=n_gt, n_det=len(labels))
    if not labels:
        return report

    tp_flags = np.array([label.is_tp for label in labels], dtype=float)
    tp = np.cumsum(tp_flags)
    ranks = np.arange(1, len(labels) + 1, dtype=float)
    precision = tp / ranks
    recall = tp / n_gt

    f = np.array([f_score(p, r) for p, r in zip(precision, recall)])
    best = int(np.argmax(f))

    report.pr_points = [(float(p), float(r)) for p, r in zip(precision, recall)]
    report.average_precision = voc_ap(recall, precision, ap_method)
    report.max_f = float(f[best])
    report.p_at_max_f = float(precision[best])
    report.r_at_max_f = float(recall[best])
    report.n_tp = int(tp[-1])
    return report


def subset_recall(dets: Sequence[EvalDetection], gts: Sequence[GroundTruthInstance], subset: str,
                  iou_thr: float = 0.5) -> float:
    """
    Share of the subset's ground truths matched by some detection

    Ground truths outside the subset stay matchable (they absorb their
    detections) but do not enter the denominator.

    Raises:
        EvaluationError: the subset is empty
    """
    if subset not in (CURVED, STRAIGHT):
        raise ValueError(f"Unknown subset {subset!r}")
    members = {i for i, gt in enumerate(gts) if gt.subset_label == subset}
    if not members:
        raise EvaluationError(f"The {subset} subset has no ground truths")

    hits = {label.gt_index for label in match_detections(dets, gts, iou_thr) if label.is_tp}
    return len(hits & members) / len(members)


def evaluate(dets: Sequence[EvalDetection], gts: Sequence[GroundTruthInstance], iou_thr: float = 0.5,
             ap_method: str = 'all-points') -> EvalReport:
    """Full report: PR curve, AP, max-F and curved/straight recall (None for empty subsets)"""
    labels = match_detections(dets, gts, iou_thr)
    report = pr_curve(labels, len(gts), ap_method)

    hits = {label.gt_index for label in labels if label.is_tp}
    for subset in (CURVED, STRAIGHT):
        members = {i for i, gt in enumerate(gts) if gt.subset_label == subset}
        recall = len(hits & members) / len(members) if members else None
        if subset == CURVED:
            report.curved_recall, report.n_curved = recall, len(members)
        else:
            report.straight_recall, report.n_straight = recall, len(members)

    logger.info(
        f"Evaluated {len(dets)} detections against {len(gts)} ground truths: "
        f"AP {report.average_precision:.4f}, max F {report.max_f:.4f}"
    )
    return report
