"""End-to-end runs of the command-line subcommands"""

import json
import math

import pytest

from backend.cli import EXIT_ACCEPTANCE, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from tests.helpers import capsule

RECTANGLES = [
    ('img1', [[0, 0], [40, 0], [40, 4], [0, 4]]),
    ('img1', [[0, 20], [60, 20], [60, 26], [0, 26]]),
    ('img2', [[10, 10], [40, 10], [40, 15], [10, 15]]),
]

REPORT_FIELDS = {
    'fit': {'config', 'n_input', 'n_tubes', 'n_rejects', 'n_failed', 'mean_iou', 'min_iou', 'rejects', 'failures'},
    'eval': {'config', 'pr_points', 'average_precision', 'max_f', 'p_at_max_f', 'r_at_max_f', 'n_gt', 'n_det',
             'n_tp', 'curved_recall', 'straight_recall', 'n_curved', 'n_straight'},
    'stats': {'config', 'n_instances', 'n_curved', 'n_straight', 'n_failed', 'curvature_histogram',
              'curvature_bin_edges', 'radius_variation_histogram', 'radius_variation_bin_edges',
              'mean_radius_variation', 'fraction_low_variation', 'mean_fixed_radius_iou'},
    'gradcheck': {'config', 'seed', 'n_trials', 'h', 'max_error', 'median_error', 'n_resampled', 'errors', 'passed'},
    'demofit': {'config', 'n_cases', 'n_success', 'success_fraction', 'success_iou', 'passed', 'cases'},
}


def check_report(path, subcommand):
    """Parse a JSON report and check its fields and config echo"""
    data = json.loads(path.read_text())
    assert set(data) == REPORT_FIELDS[subcommand]
    assert data['config']['subcommand'] == subcommand
    assert {'medial', 'loss', 'seed'} <= set(data['config'])
    return data


def check_detection_file(path):
    """Every line is a canonical detection with exactly one region"""
    records = [json.loads(line) for line in path.read_text().splitlines()]
    for record in records:
        assert isinstance(record['image_id'], str)
        assert 0.0 <= record['score'] <= 1.0
        assert ('tube' in record) != ('polygon' in record)
        if 'tube' in record:
            assert record['tube']['radius'] > 0
            assert all(len(p) == 2 for p in record['tube']['points'])
    return records


def check_table(path, header):
    lines = path.read_text().splitlines()
    assert lines[0].split('\t') == header
    rows = [line.split('\t') for line in lines[1:]]
    assert all(len(row) == len(header) for row in rows)
    return rows


def write_jsonl(path, rows):
    path.write_text(''.join(json.dumps(row) + '\n' for row in rows), encoding='utf-8')
    return path


@pytest.fixture
def gt_file(tmp_path):
    return write_jsonl(tmp_path / 'gt.jsonl', [{'image_id': i, 'polygon': p} for i, p in RECTANGLES])


class TestFit:
    def test_rectangles(self, tmp_path, gt_file):
        out = tmp_path / 'tubes.jsonl'
        assert main(['fit', '--in', str(gt_file), '--out', str(out)]) == EXIT_OK

        tubes = check_detection_file(out)
        assert len(tubes) == 3
        assert tubes[0]['tube']['radius'] == pytest.approx(2.0, rel=0.01)
        assert all(len(t['tube']['points']) == 5 for t in tubes)

        summary = check_report(tmp_path / 'tubes.jsonl.summary.json', 'fit')
        assert summary['n_tubes'] == 3
        assert summary['mean_iou'] >= 0.95

    def test_points_flag(self, tmp_path, gt_file):
        out = tmp_path / 'tubes.jsonl'
        assert main(['fit', '--in', str(gt_file), '--out', str(out), '--points', '7']) == EXIT_OK
        assert all(len(t['tube']['points']) == 7 for t in check_detection_file(out))

    def test_empty_input(self, tmp_path):
        empty = tmp_path / 'empty.jsonl'
        empty.write_text('')
        out = tmp_path / 'tubes.jsonl'
        assert main(['fit', '--in', str(empty), '--out', str(out)]) == EXIT_OK
        assert out.read_text() == ''
        summary = check_report(tmp_path / 'tubes.jsonl.summary.json', 'fit')
        assert summary['n_tubes'] == 0
        assert summary['mean_iou'] is None

    def test_invalid_polygon_is_rejected(self, tmp_path):
        rows = [{'image_id': i, 'polygon': p} for i, p in RECTANGLES]
        rows.append({'image_id': 'bad', 'polygon': [[0, 0], [2, 2], [2, 0], [0, 2]]})
        src = write_jsonl(tmp_path / 'gt.jsonl', rows)
        out = tmp_path / 'tubes.jsonl'
        assert main(['fit', '--in', str(src), '--out', str(out)]) == EXIT_OK
        summary = check_report(tmp_path / 'tubes.jsonl.summary.json', 'fit')
        assert (summary['n_input'], summary['n_tubes'], summary['n_rejects']) == (4, 3, 1)
        assert summary['rejects'][0]['line'] == 4

    def test_ctw_raw_directory(self, tmp_path):
        raw = tmp_path / 'raw'
        raw.mkdir()
        top = [(x, 10) for x in range(0, 70, 10)]
        bottom = [(x, 0) for x in range(60, -10, -10)]
        (raw / '0001.txt').write_text(','.join(str(c) for p in top + bottom for c in p) + '\n')
        out = tmp_path / 'tubes.jsonl'
        assert main(['fit', '--in', str(raw), '--format', 'ctw-raw', '--out', str(out)]) == EXIT_OK
        tubes = check_detection_file(out)
        assert tubes[0]['image_id'] == '0001'
        assert tubes[0]['tube']['radius'] == pytest.approx(5.0, rel=0.01)

    def test_missing_input(self, tmp_path):
        assert main(['fit', '--in', str(tmp_path / 'nope.jsonl'), '--out', str(tmp_path / 'o')]) == EXIT_DATA

    def test_malformed_input(self, tmp_path):
        bad = tmp_path / 'gt.jsonl'
        bad.write_text('{"image_id": "a", "polygon": \n')
        assert main(['fit', '--in', str(bad), '--out', str(tmp_path / 'o')]) == EXIT_DATA


class TestEval:
    def test_fitted_tubes_score_perfectly(self, tmp_path, gt_file):
        tubes = tmp_path / 'tubes.jsonl'
        assert main(['fit', '--in', str(gt_file), '--out', str(tubes)]) == EXIT_OK

        out = tmp_path / 'eval.json'
        assert main(['eval', '--det', str(tubes), '--gt', str(gt_file), '--out', str(out)]) == EXIT_OK
        report = check_report(out, 'eval')
        assert report['max_f'] == pytest.approx(1.0)
        assert report['n_tp'] == 3
        assert report['straight_recall'] == pytest.approx(1.0)
        assert report['curved_recall'] is None

        rows = check_table(tmp_path / 'eval.json.pr.tsv', ['recall', 'precision'])
        assert rows[-1] == ['1.000000', '1.000000']

    def test_polygon_detections_and_threshold(self, tmp_path, gt_file):
        det = write_jsonl(tmp_path / 'det.jsonl', [
            {'image_id': 'img2', 'score': 0.9, 'polygon': [[10, 10], [40, 10], [40, 12.5], [10, 12.5]]},
        ])
        out = tmp_path / 'eval.json'
        args = ['eval', '--det', str(det), '--gt', str(gt_file), '--out', str(out)]
        assert main(args) == EXIT_OK
        assert check_report(out, 'eval')['n_tp'] == 0

        assert main(args + ['--iou', '0.4']) == EXIT_OK
        report = check_report(out, 'eval')
        assert report['n_tp'] == 1
        assert report['config']['eval_iou'] == 0.4

    def test_empty_ground_truth(self, tmp_path):
        gt = tmp_path / 'gt.jsonl'
        gt.write_text('')
        det = write_jsonl(tmp_path / 'det.jsonl', [])
        assert main(['eval', '--det', str(det), '--gt', str(gt), '--out', str(tmp_path / 'e.json')]) == EXIT_DATA


class TestNms:
    @pytest.fixture
    def chain_file(self, tmp_path):
        rows = [
            {'image_id': 'img', 'score': score, 'tube': capsule(x0, x0 + 10).to_dict()}
            for score, x0 in [(0.9, 0), (0.8, 3), (0.7, 6)]
        ]
        return write_jsonl(tmp_path / 'det.jsonl', rows)

    def test_hard_tube(self, tmp_path, chain_file):
        out = tmp_path / 'kept.jsonl'
        assert main(['nms', '--det', str(chain_file), '--out', str(out)]) == EXIT_OK
        kept = check_detection_file(out)
        assert [k['score'] for k in kept] == [0.9, 0.7]

    def test_soft_box(self, tmp_path, chain_file):
        out = tmp_path / 'kept.jsonl'
        assert main(['nms', '--det', str(chain_file), '--mode', 'soft-box', '--out', str(out)]) == EXIT_OK
        kept = check_detection_file(out)
        assert [k['score'] for k in kept[:2]] == [0.9, 0.7]
        # boxes of neighbouring capsules overlap at IoU 0.6, decayed twice
        assert kept[2]['score'] == pytest.approx(0.8 * math.exp(-2 * 0.36 / 0.5))
        assert 'tube' in kept[2]

    def test_hard_tube_rejects_polygons(self, tmp_path):
        det = write_jsonl(tmp_path / 'det.jsonl', [
            {'image_id': 'img', 'score': 0.5, 'polygon': [[0, 0], [1, 0], [0, 1]]},
        ])
        assert main(['nms', '--det', str(det), '--out', str(tmp_path / 'k.jsonl')]) == EXIT_DATA

    def test_threshold_out_of_range(self, tmp_path, chain_file):
        assert main(['nms', '--det', str(chain_file), '--iou', '1.5', '--out', str(tmp_path / 'k')]) == EXIT_USAGE


class TestStats:
    def test_tables(self, tmp_path, gt_file):
        out = tmp_path / 'stats.json'
        assert main(['stats', '--in', str(gt_file), '--out', str(out)]) == EXIT_OK
        stats = check_report(out, 'stats')
        assert stats['n_instances'] == 3
        assert stats['n_straight'] == 3

        curvature = check_table(tmp_path / 'stats.json.curvature.tsv', ['bin_start', 'bin_end', 'count'])
        variation = check_table(tmp_path / 'stats.json.radius_variation.tsv', ['bin_start', 'bin_end', 'count'])
        assert len(curvature) == 16
        assert len(variation) == 20
        assert sum(int(row[2]) for row in curvature) == 3


class TestGradcheck:
    def test_zero_trials_is_usage_error(self):
        assert main(['gradcheck', '--trials', '0']) == EXIT_USAGE

    def test_deterministic_report(self, tmp_path):
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        assert main(['gradcheck', '--trials', '5', '--seed', '4', '--out', str(first)]) == EXIT_OK
        assert main(['gradcheck', '--trials', '5', '--seed', '4', '--out', str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        report = check_report(first, 'gradcheck')
        assert report['n_trials'] == 5
        assert report['passed'] is True

    def test_impossible_tolerance_fails(self, tmp_path, monkeypatch):
        from backend.config import Config

        monkeypatch.setattr(Config, 'GRADCHECK_TOLERANCE', 1e-300)
        assert main(['gradcheck', '--trials', '2']) == EXIT_ACCEPTANCE


class TestDemofit:
    def test_zero_perturbation(self, tmp_path):
        out = tmp_path / 'demo.json'
        args = ['demofit', '--cases', '1', '--vertex-noise', '0', '--radius-jitter', '0', '--out', str(out)]
        assert main(args) == EXIT_OK
        report = check_report(out, 'demofit')
        assert (report['n_success'], report['n_cases']) == (1, 1)
        assert report['cases'][0]['iterations'] == 0
        assert check_table(tmp_path / 'demo.json.trajectories.tsv', ['case', 'iteration', 'loss']) == []

    def test_deterministic_report(self, tmp_path):
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        for out in (first, second):
            main(['demofit', '--cases', '2', '--seed', '3', '--max-iters', '30', '--out', str(out)])
        assert first.read_bytes() == second.read_bytes()
        assert (tmp_path / 'a.json.trajectories.tsv').read_bytes() == (tmp_path / 'b.json.trajectories.tsv').read_bytes()


def test_unknown_subcommand_exits_with_usage_code():
    with pytest.raises(SystemExit) as info:
        main(['render'])
    assert info.value.code == EXIT_USAGE
