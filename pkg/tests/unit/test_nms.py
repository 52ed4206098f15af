"""Unit tests for soft-NMS and polygonal NMS"""

import math

import pytest

from ml.geometry import PolyChain
from ml.medial import EnvelopeError, Tube
from services.nms_service import BoxDetection, TubeDetection, polygonal_nms, soft_nms
from tests.helpers import capsule


def box(xmin, ymin, xmax, ymax, score, detection_id, image_id='img'):
    return BoxDetection((xmin, ymin, xmax, ymax), score, detection_id, image_id)


class TestBoxDetection:
    def test_degenerate_box(self):
        with pytest.raises(ValueError, match="degenerate"):
            box(0, 0, 0, 10, 0.5, 0)

    def test_score_out_of_range(self):
        with pytest.raises(ValueError, match="score"):
            box(0, 0, 1, 1, 1.5, 0)


class TestSoftNMS:
    def test_duplicate_is_decayed_not_dropped(self):
        a = box(0, 0, 10, 10, 0.9, 0)
        b = box(0, 0, 10, 10, 0.8, 1)
        c = box(20, 20, 30, 30, 0.7, 2)
        out = soft_nms([a, b, c])
        assert [d.detection_id for d in out] == [0, 2, 1]
        assert out[0].score == 0.9
        assert out[1].score == 0.7
        assert out[2].score == pytest.approx(0.8 * math.exp(-2.0))
        assert out[2].score == pytest.approx(0.10827, abs=1e-5)

    def test_linear_decay_drops_exact_duplicate(self):
        a = box(0, 0, 10, 10, 0.9, 0)
        b = box(0, 0, 10, 10, 0.8, 1)
        out = soft_nms([a, b], method='linear')
        assert [d.detection_id for d in out] == [0]

    def test_overlap_at_threshold_is_not_decayed(self):
        a = box(0, 0, 10, 10, 0.9, 0)
        half = box(0, 0, 10, 5, 0.6, 1)
        out = soft_nms([a, half], iou_thr=0.5)
        assert out[1].score == 0.6

    def test_score_floor(self):
        a = box(0, 0, 10, 10, 0.9, 0)
        b = box(0, 0, 10, 10, 0.01, 1)
        assert len(soft_nms([a, b], score_floor=0.005)) == 1

    def test_ties_broken_by_detection_id(self):
        a = box(0, 0, 1, 1, 0.5, 3)
        b = box(5, 5, 6, 6, 0.5, 1)
        assert [d.detection_id for d in soft_nms([a, b])] == [1, 3]

    def test_empty(self):
        assert soft_nms([]) == []

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="method"):
            soft_nms([], method='cubic')


class TestPolygonalNMS:
    def _chain(self, cap_style):
        dets = [
            TubeDetection(capsule(0, 10), 0.9, 'img', 0),
            TubeDetection(capsule(3, 13), 0.8, 'img', 1),
            TubeDetection(capsule(6, 16), 0.7, 'img', 2),
        ]
        return polygonal_nms(dets, iou_thr=0.5, cap_style=cap_style)

    @pytest.mark.parametrize('cap_style', ['round', 'flat'])
    def test_overlapping_chain_keeps_first_and_last(self, cap_style):
        assert [d.detection_id for d in self._chain(cap_style)] == [0, 2]

    def test_images_are_independent(self):
        dets = [
            TubeDetection(capsule(0, 10), 0.9, 'a', 0),
            TubeDetection(capsule(0, 10), 0.8, 'b', 1),
        ]
        assert len(polygonal_nms(dets)) == 2

    def test_output_is_score_sorted(self):
        dets = [
            TubeDetection(capsule(0, 10), 0.3, 'a', 0),
            TubeDetection(capsule(0, 10, y=50), 0.8, 'b', 1),
        ]
        assert [d.score for d in polygonal_nms(dets)] == [0.8, 0.3]

    def test_invalid_envelope_names_detection(self):
        bent = Tube(PolyChain([(0, 0), (5, 0), (5.5, 1)]), 3.0)
        dets = [TubeDetection(capsule(0, 10), 0.9, 'img', 0), TubeDetection(bent, 0.5, 'img', 7)]
        with pytest.raises(EnvelopeError, match="Detection 7"):
            polygonal_nms(dets, cap_style='round')

    def test_default_caps_match_fitted_envelopes(self):
        det = TubeDetection(capsule(0, 10, radius=2.0), 0.5)
        assert det.envelope().area == pytest.approx(40.0)

    def test_idempotent(self):
        once = self._chain('round')
        twice = polygonal_nms(once, iou_thr=0.5)
        assert [d.detection_id for d in twice] == [d.detection_id for d in once]

    def test_bounding_box(self):
        det = TubeDetection(capsule(0, 10, radius=2.0), 0.5)
        assert det.bounding_box() == (-2.0, -2.0, 12.0, 2.0)
