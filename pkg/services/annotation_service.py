"""
Annotation and detection interchange
Canonical JSON-lines formats plus adapters for CTW-1500-style and
Total-Text-style raw files
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from ml.geometry import GeometryError, Polygon
from ml.medial import Tube

logger = logging.getLogger(__name__)

CANONICAL = 'canonical-jsonl'
CTW_RAW = 'ctw-raw'
TOTALTEXT_RAW = 'totaltext-raw'
FORMATS = (CANONICAL, CTW_RAW, TOTALTEXT_RAW)

CTW_LAYOUTS = ('absolute', 'bbox-offset')
TOTALTEXT_LAYOUTS = ('bracket', 'csv')
CTW_VERTICES = 14
ANNOTATION_FIELDS = frozenset({'image_id', 'polygon'})

_BRACKET_RE = re.compile(r"x:\s*\[\[([^\]]*)\]\]\s*,\s*y:\s*\[\[([^\]]*)\]\]")
_NUMBER_RE = re.compile(r"[-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?")


class AnnotationFormatError(ValueError):
    """Malformed annotation or detection input, with its location"""

    def __init__(self, path, line: int, reason: str, raw: str = ''):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = str(path)
        self.line = line
        self.reason = reason
        self.raw = raw


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    polygon: List[List[float]]
    source_format: str = CANONICAL

    def to_polygon(self) -> Polygon:
        return Polygon(self.polygon)

    def to_dict(self) -> Dict[str, Any]:
        return {'image_id': self.image_id, 'polygon': self.polygon}


@dataclass(frozen=True)
class Reject:
    path: str
    line: int
    reason: str
    raw: str

    def to_dict(self) -> Dict[str, Any]:
        return {'path': self.path, 'line': self.line, 'reason': self.reason, 'raw': self.raw}


@dataclass(frozen=True)
class DetectionRecord:
    """Canonical detection: exactly one of tube / polygon"""
    image_id: str
    score: float
    tube: Optional[Tube] = None
    polygon: Optional[List[List[float]]] = None
    detection_id: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'image_id': self.image_id, 'score': self.score}
        if self.tube is not None:
            data['tube'] = self.tube.to_dict()
        else:
            data['polygon'] = self.polygon
        return data


def _pairs(values: List[float]) -> List[List[float]]:
    return [[float(values[i]), float(values[i + 1])] for i in range(0, len(values), 2)]


def _iter_lines(path: Path) -> Iterator[Tuple[int, str]]:
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            text = line.strip()
            if text:
                yield number, text


def _accept(records: List[AnnotationRecord], rejects: Optional[List[Reject]], path: Path, number: int,
            raw: str, image_id: str, polygon: List[List[float]], source_format: str):
    try:
        Polygon(polygon)
    except GeometryError as e:
        logger.warning(f"{path}:{number}: rejected polygon of {image_id!r}: {e}")
        if rejects is not None:
            rejects.append(Reject(str(path), number, str(e), raw))
        return
    records.append(AnnotationRecord(image_id=image_id, polygon=polygon, source_format=source_format))


def _parse_point_list(path: Path, number: int, raw: str, value) -> List[List[float]]:
    if not isinstance(value, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
        for p in value
    ):
        raise AnnotationFormatError(path, number, "polygon must be a list of [x, y] number pairs", raw)
    return [[float(x), float(y)] for x, y in value]


def _load_canonical(path: Path, rejects) -> List[AnnotationRecord]:
    records: List[AnnotationRecord] = []
    for number, raw in _iter_lines(path):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise AnnotationFormatError(path, number, f"invalid JSON ({e.msg})", raw) from e
        if not isinstance(data, dict) or not isinstance(data.get('image_id'), str) or 'polygon' not in data:
            raise AnnotationFormatError(path, number, "expected fields image_id (string) and polygon", raw)
        extra = sorted(set(data) - ANNOTATION_FIELDS)
        if extra:
            raise AnnotationFormatError(path, number, f"unexpected fields {', '.join(extra)}", raw)
        polygon = _parse_point_list(path, number, raw, data['polygon'])
        _accept(records, rejects, path, number, raw, data['image_id'], polygon, CANONICAL)
    return records


def _numbers(path: Path, number: int, raw: str, tokens: List[str]) -> List[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as e:
        raise AnnotationFormatError(path, number, f"non-numeric coordinate ({e})", raw) from e


def _load_ctw_file(path: Path, layout: str, rejects) -> List[AnnotationRecord]:
    records: List[AnnotationRecord] = []
    expected = 2 * CTW_VERTICES + (4 if layout == 'bbox-offset' else 0)
    for number, raw in _iter_lines(path):
        values = _numbers(path, number, raw, [t for t in raw.split(',') if t.strip()])
        if len(values) % 2:
            raise AnnotationFormatError(path, number, f"odd coordinate count ({len(values)})", raw)
        if len(values) != expected:
            raise AnnotationFormatError(path, number, f"expected {expected} values for layout {layout}, got {len(values)}", raw)
        if layout == 'bbox-offset':
            xmin, ymin = values[0], values[1]
            offsets = values[4:]
            values = [v + (xmin if i % 2 == 0 else ymin) for i, v in enumerate(offsets)]
        _accept(records, rejects, path, number, raw, path.stem, _pairs(values), CTW_RAW)
    return records


def _load_totaltext_file(path: Path, layout: str, rejects) -> List[AnnotationRecord]:
    records: List[AnnotationRecord] = []
    for number, raw in _iter_lines(path):
        if layout == 'bracket':
            match = _BRACKET_RE.search(raw)
            if not match:
                raise AnnotationFormatError(path, number, "expected 'x: [[...]], y: [[...]]'", raw)
            xs = [float(v) for v in _NUMBER_RE.findall(match.group(1))]
            ys = [float(v) for v in _NUMBER_RE.findall(match.group(2))]
            if len(xs) != len(ys):
                raise AnnotationFormatError(path, number, f"x/y lists differ in length ({len(xs)} vs {len(ys)})", raw)
            polygon = [[x, y] for x, y in zip(xs, ys)]
        else:
            tokens = [t.strip() for t in raw.split(',')]
            numeric: List[str] = []
            for token in tokens:
                if not _NUMBER_RE.fullmatch(token):
                    break
                numeric.append(token)
            values = _numbers(path, number, raw, numeric)
            if len(values) % 2:
                raise AnnotationFormatError(path, number, f"odd coordinate count ({len(values)})", raw)
            polygon = _pairs(values)
        if len(polygon) < 3:
            raise AnnotationFormatError(path, number, f"need at least 3 vertices, got {len(polygon)}", raw)
        _accept(records, rejects, path, number, raw, path.stem, polygon, TOTALTEXT_RAW)
    return records


def _raw_files(path: Path) -> List[Path]:
    if path.is_dir():
        return sorted(path.glob('*.txt'))
    return [path]


def load_annotations(path, fmt: str = CANONICAL, layout: Optional[str] = None,
                     rejects: Optional[List[Reject]] = None) -> List[AnnotationRecord]:
    """
    Load annotation records

    Args:
        path: File, or for raw formats a directory of per-image *.txt files
        fmt: canonical-jsonl, ctw-raw or totaltext-raw
        layout: ctw-raw: absolute (default) or bbox-offset;
            totaltext-raw: bracket (default) or csv
        rejects: Collects polygons that parse but are not simple

    Raises:
        AnnotationFormatError: malformed line (with its line number)
    """
    path = Path(path)
    if fmt not in FORMATS:
        raise ValueError(f"Unknown annotation format {fmt!r}; expected one of {FORMATS}")

    if fmt == CANONICAL:
        records = _load_canonical(path, rejects)
    elif fmt == CTW_RAW:
        layout = layout or 'absolute'
        if layout not in CTW_LAYOUTS:
            raise ValueError(f"Unknown ctw-raw layout {layout!r}; expected one of {CTW_LAYOUTS}")
        records = [r for f in _raw_files(path) for r in _load_ctw_file(f, layout, rejects)]
    else:
        layout = layout or 'bracket'
        if layout not in TOTALTEXT_LAYOUTS:
            raise ValueError(f"Unknown totaltext-raw layout {layout!r}; expected one of {TOTALTEXT_LAYOUTS}")
        records = [r for f in _raw_files(path) for r in _load_totaltext_file(f, layout, rejects)]

    logger.info(f"Loaded {len(records)} annotations from {path} ({fmt})")
    return records


def _write_jsonl(rows, path):
    with open(path, 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + '\n')


def write_annotations(records: List[AnnotationRecord], path):
    _write_jsonl((r.to_dict() for r in records), path)


def write_rejects(rejects: List[Reject], path):
    _write_jsonl((r.to_dict() for r in rejects), path)


def _parse_detection(path: Path, number: int, raw: str, data: Any, detection_id: int) -> DetectionRecord:
    if not isinstance(data, dict) or not isinstance(data.get('image_id'), str):
        raise AnnotationFormatError(path, number, "detection needs a string image_id", raw)
    score = data.get('score')
    if isinstance(score, bool) or not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
        raise AnnotationFormatError(path, number, f"score must be a number in [0, 1], got {score!r}", raw)

    has_tube, has_polygon = 'tube' in data, 'polygon' in data
    if has_tube == has_polygon:
        raise AnnotationFormatError(path, number, "detection needs exactly one of tube / polygon", raw)

    if has_polygon:
        polygon = _parse_point_list(path, number, raw, data['polygon'])
        return DetectionRecord(data['image_id'], float(score), polygon=polygon, detection_id=detection_id)

    tube = data['tube']
    if not isinstance(tube, dict) or 'points' not in tube or 'radius' not in tube:
        raise AnnotationFormatError(path, number, "tube needs points and radius", raw)
    points = _parse_point_list(path, number, raw, tube['points'])
    try:
        parsed = Tube.from_dict({'points': points, 'radius': tube['radius']})
    except (TypeError, ValueError) as e:
        raise AnnotationFormatError(path, number, f"invalid tube ({e})", raw) from e
    return DetectionRecord(data['image_id'], float(score), tube=parsed, detection_id=detection_id)


def load_detections(path) -> List[DetectionRecord]:
    """Canonical detections; detection ids follow line order"""
    path = Path(path)
    detections: List[DetectionRecord] = []
    for number, raw in _iter_lines(path):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise AnnotationFormatError(path, number, f"invalid JSON ({e.msg})", raw) from e
        detections.append(_parse_detection(path, number, raw, data, len(detections)))
    logger.info(f"Loaded {len(detections)} detections from {path}")
    return detections


def write_detections(detections: List[DetectionRecord], path):
    _write_jsonl((d.to_dict() for d in detections), path)


def polygon_bounds(points: List[List[float]]) -> Tuple[float, float, float, float]:
    arr = np.asarray(points, dtype=float)
    return float(arr[:, 0].min()), float(arr[:, 1].min()), float(arr[:, 0].max()), float(arr[:, 1].max())
