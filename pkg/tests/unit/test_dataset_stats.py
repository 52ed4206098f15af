"""Unit tests for dataset statistics"""

import pytest

from ml.medial import MedialConfig
from ml.synthetic import sine_band_polygon
from services.annotation_service import AnnotationRecord
from services.dataset_service import ANGLE_BINS, VARIATION_BINS, dataset_stats


def record(image_id, poly):
    return AnnotationRecord(image_id, poly.vertices.tolist())


def rectangle(width, height, x0=0.0):
    return [[x0, 0.0], [x0 + width, 0.0], [x0 + width, height], [x0, height]]


@pytest.fixture
def rectangles():
    return [AnnotationRecord(f'r{i}', rectangle(w, h)) for i, (w, h) in enumerate([(40, 4), (60, 6), (30, 5)])]


class TestDatasetStats:
    def test_rectangles_are_straight_and_constant_width(self, rectangles):
        stats = dataset_stats(rectangles)
        assert stats.n_instances == 3
        assert stats.n_straight == 3
        assert stats.n_curved == 0
        assert stats.curvature_histogram[0] == 3
        assert stats.radius_variation_histogram[0] == 3
        assert stats.fraction_low_variation == 1.0
        assert stats.mean_fixed_radius_iou >= 0.95

    def test_mixed_split(self, rectangles):
        bands = [record('s0', sine_band_polygon()), record('s1', sine_band_polygon(amplitude=3.0))]
        stats = dataset_stats(bands + rectangles[:1])
        assert (stats.n_curved, stats.n_straight) == (2, 1)
        assert sum(stats.curvature_histogram) == 3

    def test_histogram_shapes(self, rectangles):
        stats = dataset_stats(rectangles)
        assert len(stats.curvature_histogram) == ANGLE_BINS
        assert len(stats.curvature_bin_edges) == ANGLE_BINS + 1
        assert len(stats.radius_variation_histogram) == VARIATION_BINS
        assert stats.radius_variation_bin_edges[-1] == 1.0

    def test_failed_fits_are_counted(self, rectangles):
        sliver = AnnotationRecord('thin', rectangle(100, 0.5))
        stats = dataset_stats(rectangles + [sliver], MedialConfig(boundary_sample_spacing=2.0))
        assert stats.n_failed >= 1
        assert stats.n_instances + stats.n_failed == 4

    def test_empty(self):
        stats = dataset_stats([])
        assert stats.n_instances == 0
        assert stats.n_failed == 0
        assert sum(stats.curvature_histogram) == 0
        assert stats.to_dict()['mean_fixed_radius_iou'] == 0.0

    def test_order_independent(self, rectangles):
        bands = [record('s0', sine_band_polygon())]
        forward = dataset_stats(rectangles + bands)
        backward = dataset_stats(list(reversed(rectangles + bands)))
        assert forward.curvature_histogram == backward.curvature_histogram
        assert forward.radius_variation_histogram == backward.radius_variation_histogram
        assert forward.mean_radius_variation == pytest.approx(backward.mean_radius_variation)
        assert forward.mean_fixed_radius_iou == pytest.approx(backward.mean_fixed_radius_iou)
