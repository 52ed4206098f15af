"""
Services package for the tube parametrization toolkit
"""

from .annotation_service import (
    AnnotationFormatError,
    AnnotationRecord,
    DetectionRecord,
    Reject,
    load_annotations,
    load_detections,
    write_annotations,
    write_detections,
    write_rejects,
)
from .dataset_service import DatasetStats, dataset_stats
from .evaluation_service import (
    EvalDetection,
    EvalReport,
    EvaluationError,
    GroundTruthInstance,
    evaluate,
    f_score,
    label_ground_truth,
    match_detections,
    pr_curve,
    subset_recall,
)
from .nms_service import BoxDetection, TubeDetection, polygonal_nms, soft_nms

__all__ = [
    'AnnotationFormatError', 'AnnotationRecord', 'DetectionRecord', 'Reject',
    'load_annotations', 'load_detections', 'write_annotations', 'write_detections', 'write_rejects',
    'DatasetStats', 'dataset_stats',
    'EvalDetection', 'EvalReport', 'EvaluationError', 'GroundTruthInstance', 'evaluate', 'f_score',
    'label_ground_truth', 'match_detections', 'pr_curve', 'subset_recall',
    'BoxDetection', 'TubeDetection', 'polygonal_nms', 'soft_nms',
]
