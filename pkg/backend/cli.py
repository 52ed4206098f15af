"""
Command-line surface for the tube parametrization toolkit

Subcommands:
    fit        annotation polygons -> tube file + summary
    eval       detections vs ground truth -> report + PR table
    nms        soft-NMS over boxes or hard NMS over tube envelopes
    stats      dataset curvature / radius-variation statistics
    gradcheck  analytic vs finite-difference gradients of the tube loss
    demofit    descent from perturbed tubes back to their ground truth

Exit codes: 0 success, 1 usage error, 2 data error, 3 acceptance failure.
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from backend.config import Config
from backend.logging_config import setup_logging
from ml.geometry import GeometryError, Polygon, polygon_iou
from ml.medial import EnvelopeError, MedialConfig, fit_tube_detailed, tube_envelope
from ml.synthetic import make_rng, perturb_tube, random_tube
from ml.tube_loss import DescentDivergedError, LossConfig, fit_tube_descent, gradient_check
from services.annotation_service import (
    FORMATS,
    AnnotationFormatError,
    DetectionRecord,
    Reject,
    load_annotations,
    load_detections,
    polygon_bounds,
    write_detections,
)
from services.dataset_service import dataset_stats
from services.evaluation_service import (
    AP_METHODS,
    EvalDetection,
    EvaluationError,
    evaluate,
    label_ground_truth,
)
from services.nms_service import SOFT_NMS_METHODS, BoxDetection, TubeDetection, polygonal_nms, soft_nms
from services.report_service import histogram_rows, side_path, write_json, write_tsv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ACCEPTANCE = 3

NMS_MODES = ('soft-box', 'hard-tube')
DEMOFIT_SUCCESS_IOU = 0.9
DEMOFIT_SUCCESS_FRACTION = 0.9


class UsageError(ValueError):
    """Invalid command-line values"""


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Resolved settings for one CLI invocation: flags override the environment"""
    subcommand: str
    input_path: Optional[Path] = None
    gt_path: Optional[Path] = None
    out_path: Optional[Path] = None
    fmt: str = 'canonical-jsonl'
    layout: Optional[str] = None
    medial: MedialConfig = field(default_factory=MedialConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    eval_iou: float = 0.5
    ap_method: str = 'all-points'
    nms_mode: str = 'hard-tube'
    nms_iou: float = 0.5
    decay_sigma: float = 0.5
    score_floor: float = 0.001
    nms_method: str = 'gaussian'
    seed: int = 0
    trials: int = 100
    cases: int = 20
    max_iters: int = 500
    vertex_noise: float = 0.5
    radius_jitter: float = 0.3
    gradcheck_tolerance: float = 1e-4

    def __post_init__(self):
        problems = []
        for name in ('eval_iou', 'nms_iou', 'score_floor'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must be in [0, 1], got {getattr(self, name)}")
        if self.ap_method not in AP_METHODS:
            problems.append(f"ap_method must be one of {AP_METHODS}")
        if self.nms_mode not in NMS_MODES:
            problems.append(f"mode must be one of {NMS_MODES}")
        if self.nms_method not in SOFT_NMS_METHODS:
            problems.append(f"nms_method must be one of {SOFT_NMS_METHODS}")
        if self.decay_sigma <= 0:
            problems.append(f"decay_sigma must be > 0, got {self.decay_sigma}")
        if self.trials < 1:
            problems.append(f"trials must be >= 1, got {self.trials}")
        if self.cases < 1:
            problems.append(f"cases must be >= 1, got {self.cases}")
        if self.max_iters < 1:
            problems.append(f"max_iters must be >= 1, got {self.max_iters}")
        if self.vertex_noise < 0:
            problems.append(f"vertex_noise must be >= 0, got {self.vertex_noise}")
        if not 0.0 <= self.radius_jitter < 1.0:
            problems.append(f"radius_jitter must be in [0, 1), got {self.radius_jitter}")
        if problems:
            raise UsageError('; '.join(problems))

    def echo(self) -> Dict[str, Any]:
        """Hyperparameters written into every report"""
        data = {
            'subcommand': self.subcommand,
            'medial': asdict(self.medial),
            'loss': self.loss.to_dict(),
            'eval_iou': self.eval_iou,
            'ap_method': self.ap_method,
            'nms_mode': self.nms_mode,
            'nms_iou': self.nms_iou,
            'decay_sigma': self.decay_sigma,
            'score_floor': self.score_floor,
            'nms_method': self.nms_method,
            'seed': self.seed,
        }
        if self.subcommand == 'gradcheck':
            data.update(trials=self.trials, tolerance=self.gradcheck_tolerance)
        if self.subcommand == 'demofit':
            data.update(cases=self.cases, max_iters=self.max_iters, vertex_noise=self.vertex_noise,
                        radius_jitter=self.radius_jitter)
        return data


def _pick(value, default):
    return default if value is None else value


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge parsed flags with Config defaults; invalid values raise UsageError"""
    try:
        medial = Config.medial_config(
            n_points=getattr(args, 'points', None),
            envelope_cap_style=getattr(args, 'cap_style', None),
        )
        loss = Config.loss_config(
            alpha=getattr(args, 'alpha', None),
            sigma_abs=getattr(args, 'sigma_abs', None),
            sigma_tan=getattr(args, 'sigma_tan', None),
            n_samples=getattr(args, 'samples', None),
            n_points=getattr(args, 'points', None),
        )
    except ValueError as e:
        raise UsageError(str(e)) from e

    iou = getattr(args, 'iou', None)

    def path(name):
        value = getattr(args, name, None)
        return Path(value) if value else None

    return RunConfig(
        subcommand=args.command,
        input_path=path('input') or path('det'),
        gt_path=path('gt'),
        out_path=path('out'),
        fmt=getattr(args, 'format', None) or 'canonical-jsonl',
        layout=getattr(args, 'layout', None),
        medial=medial,
        loss=loss,
        eval_iou=_pick(iou if args.command == 'eval' else None, Config.EVAL_IOU_THRESHOLD),
        ap_method=_pick(getattr(args, 'ap_method', None), Config.EVAL_AP_METHOD),
        nms_mode=_pick(getattr(args, 'mode', None), 'hard-tube'),
        nms_iou=_pick(iou if args.command == 'nms' else None, Config.NMS_IOU_THRESHOLD),
        decay_sigma=_pick(getattr(args, 'decay_sigma', None), Config.SOFT_NMS_SIGMA),
        score_floor=_pick(getattr(args, 'score_floor', None), Config.SOFT_NMS_SCORE_FLOOR),
        nms_method=_pick(getattr(args, 'nms_method', None), Config.SOFT_NMS_METHOD),
        seed=_pick(getattr(args, 'seed', None), Config.RANDOM_SEED),
        trials=_pick(getattr(args, 'trials', None), 100),
        cases=_pick(getattr(args, 'cases', None), 20),
        max_iters=_pick(getattr(args, 'max_iters', None), 500),
        vertex_noise=_pick(getattr(args, 'vertex_noise', None), 0.5),
        radius_jitter=_pick(getattr(args, 'radius_jitter', None), 0.3),
        gradcheck_tolerance=Config.GRADCHECK_TOLERANCE,
    )


def cmd_fit(run: RunConfig) -> int:
    """Fit one tube per valid annotation; summary with round-trip IoU and rejects"""
    rejects: List[Reject] = []
    records = load_annotations(run.input_path, run.fmt, run.layout, rejects)

    tubes: List[DetectionRecord] = []
    ious: List[float] = []
    failures: List[Dict[str, Any]] = []
    for index, record in enumerate(records):
        poly = record.to_polygon()
        try:
            fit = fit_tube_detailed(poly, run.medial)
            envelope = tube_envelope(fit.tube, run.medial.cap_segments, run.medial.envelope_cap_style)
        except (ValueError, GeometryError) as e:
            logger.warning(f"Tube fit failed for record {index} of {record.image_id!r}: {e}")
            failures.append({'index': index, 'image_id': record.image_id, 'reason': str(e)})
            continue
        tubes.append(DetectionRecord(record.image_id, 1.0, tube=fit.tube, detection_id=index))
        ious.append(polygon_iou(envelope, poly))

    write_detections(tubes, run.out_path)
    summary = {
        'config': run.echo(),
        'n_input': len(records) + len(rejects),
        'n_tubes': len(tubes),
        'n_rejects': len(rejects),
        'n_failed': len(failures),
        'mean_iou': float(np.mean(ious)) if ious else None,
        'min_iou': float(np.min(ious)) if ious else None,
        'rejects': [r.to_dict() for r in rejects],
        'failures': failures,
    }
    write_json(summary, side_path(run.out_path, 'summary.json'))
    logger.info(
        f"Fitted {len(tubes)} tubes ({len(rejects)} rejected, {len(failures)} failed), "
        f"mean IoU {summary['mean_iou'] if ious else 'n/a'}"
    )
    return EXIT_OK


def _eval_detection(record: DetectionRecord, run: RunConfig) -> EvalDetection:
    try:
        if record.tube is not None:
            polygon = tube_envelope(record.tube, run.medial.cap_segments, run.medial.envelope_cap_style)
        else:
            polygon = Polygon(record.polygon)
    except (EnvelopeError, GeometryError) as e:
        logger.warning(f"Detection {record.detection_id} on {record.image_id!r} has no valid region ({e}); counted as FP")
        polygon = None
    return EvalDetection(record.image_id, polygon, record.score, record.detection_id)


def cmd_eval(run: RunConfig) -> int:
    """Evaluate detections against ground truth; report + PR table"""
    detections = load_detections(run.input_path)
    annotations = load_annotations(run.gt_path, run.fmt, run.layout)

    gts = label_ground_truth([a.image_id for a in annotations], [a.to_polygon() for a in annotations], run.medial)
    dets = [_eval_detection(d, run) for d in detections]
    report = evaluate(dets, gts, run.eval_iou, run.ap_method)

    data = report.to_dict()
    data['config'] = run.echo()
    write_json(data, run.out_path)
    write_tsv(('recall', 'precision'), [(r, p) for p, r in report.pr_points], side_path(run.out_path, 'pr.tsv'))
    logger.info(
        f"AP {report.average_precision:.4f}, max F {report.max_f:.4f} "
        f"(P {report.p_at_max_f:.4f}, R {report.r_at_max_f:.4f})"
    )
    return EXIT_OK


def _record_box(record: DetectionRecord):
    if record.tube is not None:
        return TubeDetection(record.tube, record.score, record.image_id, record.detection_id).bounding_box()
    return polygon_bounds(record.polygon)


def _group(records: Sequence[DetectionRecord]) -> Dict[str, List[DetectionRecord]]:
    groups: Dict[str, List[DetectionRecord]] = {}
    for record in records:
        groups.setdefault(record.image_id, []).append(record)
    return groups


def cmd_nms(run: RunConfig) -> int:
    """Filter detections per image, keeping the canonical schema"""
    records = load_detections(run.input_path)
    by_id = {r.detection_id: r for r in records}
    out: List[DetectionRecord] = []

    if run.nms_mode == 'hard-tube':
        polygons = [r.detection_id for r in records if r.tube is None]
        if polygons:
            raise AnnotationFormatError(run.input_path, 0, f"hard-tube NMS needs tube records; "
                                        f"{len(polygons)} detection(s) carry polygons without a radius")
        dets = [TubeDetection(r.tube, r.score, r.image_id, r.detection_id) for r in records]
        kept = polygonal_nms(dets, run.nms_iou, run.medial.cap_segments, run.medial.envelope_cap_style)
        kept_by_image = _group([by_id[d.detection_id] for d in kept])
        for image_id in _group(records):
            out.extend(kept_by_image.get(image_id, []))
    else:
        for image_id, group in _group(records).items():
            boxes = [BoxDetection(_record_box(r), r.score, r.detection_id, image_id) for r in group]
            for det in soft_nms(boxes, run.nms_iou, run.decay_sigma, run.score_floor, run.nms_method):
                src = by_id[det.detection_id]
                out.append(DetectionRecord(src.image_id, float(det.score), src.tube, src.polygon, src.detection_id))

    write_detections(out, run.out_path)
    logger.info(f"NMS ({run.nms_mode}) kept {len(out)} of {len(records)} detections")
    return EXIT_OK


def cmd_stats(run: RunConfig) -> int:
    """Dataset statistics with histogram tables"""
    records = load_annotations(run.input_path, run.fmt, run.layout)
    stats = dataset_stats(records, run.medial, show_progress=False)

    data = stats.to_dict()
    data['config'] = run.echo()
    write_json(data, run.out_path)
    header = ('bin_start', 'bin_end', 'count')
    write_tsv(header, histogram_rows(stats.curvature_bin_edges, stats.curvature_histogram),
              side_path(run.out_path, 'curvature.tsv'))
    write_tsv(header, histogram_rows(stats.radius_variation_bin_edges, stats.radius_variation_histogram),
              side_path(run.out_path, 'radius_variation.tsv'))
    logger.info(f"Stats: {stats.n_instances} instances, {stats.n_curved} curved, {stats.n_failed} failed")
    return EXIT_OK


def cmd_gradcheck(run: RunConfig) -> int:
    """Exit 3 when the maximal relative error exceeds the tolerance"""
    report = gradient_check(run.seed, run.trials, run.loss)
    passed = report.max_error <= run.gradcheck_tolerance
    data = {
        'config': run.echo(),
        'seed': report.seed,
        'n_trials': report.n_trials,
        'h': report.h,
        'max_error': report.max_error,
        'median_error': report.median_error,
        'n_resampled': report.n_resampled,
        'errors': report.errors,
        'passed': passed,
    }
    if run.out_path is not None:
        write_json(data, run.out_path)
    logger.info(f"Gradient check {'passed' if passed else 'FAILED'}: max rel err {report.max_error:.3e}")
    return EXIT_OK if passed else EXIT_ACCEPTANCE


def cmd_demofit(run: RunConfig) -> int:
    """Descent from perturbed synthetic tubes; exit 3 when too few reach IoU 0.9"""
    rng = make_rng(run.seed)
    radius_range = (1.0 - run.radius_jitter, 1.0 + run.radius_jitter)
    cases = []
    trajectory_rows = []

    for case in range(run.cases):
        gt = random_tube(rng, run.loss.n_points)
        init = perturb_tube(rng, gt, run.vertex_noise, radius_range)
        entry: Dict[str, Any] = {'case': case, 'success': False, 'iou': 0.0}
        try:
            result = fit_tube_descent(init, gt, run.loss, max_iters=run.max_iters)
            fitted, trajectory = result.tube, result.trajectory
            entry.update(status=result.status, iterations=result.iterations, initial_loss=result.initial_loss,
                         final_loss=result.final_loss)
        except DescentDivergedError as e:
            logger.warning(f"Case {case}: {e}")
            fitted, trajectory = e.tube, e.trajectory
            entry.update(status='diverged', iterations=len(e.trajectory))

        try:
            iou = polygon_iou(tube_envelope(fitted), tube_envelope(gt))
            entry.update(iou=iou, success=iou >= DEMOFIT_SUCCESS_IOU)
        except (EnvelopeError, GeometryError) as e:
            logger.warning(f"Case {case}: fitted tube has no valid envelope ({e})")
            entry['status'] = 'invalid_envelope'
        cases.append(entry)
        trajectory_rows.extend((case, i + 1, float(loss)) for i, loss in enumerate(trajectory))

    n_success = sum(1 for c in cases if c['success'])
    fraction = n_success / run.cases
    passed = fraction >= DEMOFIT_SUCCESS_FRACTION
    data = {
        'config': run.echo(),
        'n_cases': run.cases,
        'n_success': n_success,
        'success_fraction': fraction,
        'success_iou': DEMOFIT_SUCCESS_IOU,
        'passed': passed,
        'cases': cases,
    }
    if run.out_path is not None:
        write_json(data, run.out_path)
        write_tsv(('case', 'iteration', 'loss'), trajectory_rows, side_path(run.out_path, 'trajectories.tsv'))
    logger.info(f"Demo fit: {n_success}/{run.cases} cases reached IoU >= {DEMOFIT_SUCCESS_IOU}")
    return EXIT_OK if passed else EXIT_ACCEPTANCE


COMMANDS = {
    'fit': cmd_fit,
    'eval': cmd_eval,
    'nms': cmd_nms,
    'stats': cmd_stats,
    'gradcheck': cmd_gradcheck,
    'demofit': cmd_demofit,
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument('--log-level', default=None, help='Log level (default: LOG_LEVEL or INFO)')
    p.add_argument('--log-json', action='store_true', help='Emit JSON log records')


def _add_annotations(p: argparse.ArgumentParser, flag: str = '--in', dest: str = 'input'):
    p.add_argument(flag, dest=dest, required=True, help='Annotation file (or directory for raw formats)')
    p.add_argument('--format', choices=FORMATS, default='canonical-jsonl', help='Annotation format')
    p.add_argument('--layout', default=None, help='Raw layout: absolute|bbox-offset or bracket|csv')


def _add_medial(p: argparse.ArgumentParser):
    p.add_argument('--points', type=int, default=None, help='Medial points per tube (default 5)')
    p.add_argument('--cap-style', choices=('flat', 'round'), default=None, help='Envelope end caps')


def _add_loss(p: argparse.ArgumentParser):
    p.add_argument('--alpha', type=float, default=None, help='Weight of s_abs against s_tan')
    p.add_argument('--sigma-abs', type=float, default=None, help='Proximity scale (default: gt radius)')
    p.add_argument('--sigma-tan', type=float, default=None, help='Tangent kernel scale')
    p.add_argument('--samples', type=int, default=None, help='Arc-length samples (default 100)')
    p.add_argument('--seed', type=int, default=None, help='Random seed')


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog='tubes', description='Tube parametrization toolkit for text instances')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fit', help='Fit tubes to annotation polygons')
    _add_annotations(p)
    _add_medial(p)
    p.add_argument('--out', required=True, help='Output tube file (canonical detections)')
    _add_common(p)

    p = sub.add_parser('eval', help='Evaluate detections against ground truth')
    p.add_argument('--det', required=True, help='Canonical detection file')
    _add_annotations(p, '--gt', 'gt')
    _add_medial(p)
    p.add_argument('--iou', type=float, default=None, help='Match threshold (strict >)')
    p.add_argument('--ap-method', choices=AP_METHODS, default=None)
    p.add_argument('--out', required=True, help='Report file (JSON)')
    _add_common(p)

    p = sub.add_parser('nms', help='Non-maximum suppression per image')
    p.add_argument('--det', required=True, help='Canonical detection file')
    p.add_argument('--mode', choices=NMS_MODES, default='hard-tube')
    _add_medial(p)
    p.add_argument('--iou', type=float, default=None, help='Overlap threshold')
    p.add_argument('--decay-sigma', type=float, default=None, help='Gaussian soft-NMS sigma')
    p.add_argument('--score-floor', type=float, default=None, help='Soft-NMS drop threshold')
    p.add_argument('--nms-method', choices=SOFT_NMS_METHODS, default=None)
    p.add_argument('--out', required=True, help='Filtered detection file')
    _add_common(p)

    p = sub.add_parser('stats', help='Dataset curvature and radius-variation statistics')
    _add_annotations(p)
    _add_medial(p)
    p.add_argument('--out', required=True, help='Stats report file (JSON)')
    _add_common(p)

    p = sub.add_parser('gradcheck', help='Check the analytic tube-loss gradient')
    _add_loss(p)
    p.add_argument('--points', type=int, default=None, help='Medial points per tube (default 5)')
    p.add_argument('--trials', type=int, default=None, help='Random configurations (default 100)')
    p.add_argument('--out', default=None, help='Report file (JSON)')
    _add_common(p)

    p = sub.add_parser('demofit', help='Fit perturbed synthetic tubes by descent')
    _add_loss(p)
    p.add_argument('--points', type=int, default=None, help='Medial points per tube (default 5)')
    p.add_argument('--cases', type=int, default=None, help='Perturbed cases (default 20)')
    p.add_argument('--max-iters', type=int, default=None, help='Descent iterations (default 500)')
    p.add_argument('--vertex-noise', type=float, default=None, help='Vertex noise in radii (default 0.5)')
    p.add_argument('--radius-jitter', type=float, default=None, help='Radius scale jitter (default 0.3)')
    p.add_argument('--out', default=None, help='Report file (JSON)')
    _add_common(p)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.log_level or Config.LOG_LEVEL, 'json' if args.log_json else Config.LOG_FORMAT)

    try:
        Config.validate()
        run = run_config_from_args(args)
    except ValueError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    try:
        return COMMANDS[run.subcommand](run)
    except (AnnotationFormatError, EvaluationError, OSError) as e:
        logger.error(f"{run.subcommand} failed: {e}")
        return EXIT_DATA
    except (GeometryError, EnvelopeError, ValueError) as e:
        logger.error(f"{run.subcommand} failed on invalid data: {e}")
        return EXIT_DATA


if __name__ == '__main__':
    sys.exit(main())
