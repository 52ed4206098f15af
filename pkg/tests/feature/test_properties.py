"""Property-based checks of geometric and protocol invariants"""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from ml.geometry import PolyChain, arc_length_sample, polygon_iou
from ml.synthetic import perturb_tube, random_tube, star_polygon
from ml.tube_loss import LossConfig, loss_axis, loss_endpoints, loss_radius, s_abs, s_tan
from services.evaluation_service import MatchLabel, pr_curve

seeds = st.integers(min_value=0, max_value=2 ** 31 - 1)
property_settings = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def polygon_pair(draw):
    """Two random star polygons close enough to overlap most of the time"""
    rng = np.random.default_rng(draw(seeds))
    a = star_polygon(rng, draw(st.integers(min_value=3, max_value=10)))
    b = star_polygon(rng, draw(st.integers(min_value=3, max_value=10)), center=rng.uniform(-6.0, 6.0, 2))
    return a, b


@st.composite
def tube_pair(draw):
    rng = np.random.default_rng(draw(seeds))
    gt = random_tube(rng)
    return perturb_tube(rng, gt, vertex_noise=1.0), gt


class TestIoUProperties:
    @property_settings
    @given(polygon_pair())
    def test_symmetric_and_bounded(self, pair):
        a, b = pair
        iou = polygon_iou(a, b)
        assert 0.0 <= iou <= 1.0
        assert iou == pytest.approx(polygon_iou(b, a), abs=1e-12)

    @property_settings
    @given(polygon_pair(), st.floats(min_value=0.0, max_value=2 * math.pi),
           st.floats(min_value=0.1, max_value=10.0), st.tuples(st.floats(-500, 500), st.floats(-500, 500)))
    def test_similarity_invariant(self, pair, rotation, scale, offset):
        a, b = pair
        before = polygon_iou(a, b)
        after = polygon_iou(a.transformed(rotation, scale, offset), b.transformed(rotation, scale, offset))
        assert after == pytest.approx(before, abs=1e-6)


class TestSamplingProperties:
    @property_settings
    @given(seeds, st.integers(min_value=2, max_value=300))
    def test_samples_are_evenly_spaced_in_arc_length(self, seed, m):
        rng = np.random.default_rng(seed)
        chain = random_tube(rng, int(rng.integers(2, 8))).axis
        samples = arc_length_sample(chain, m)
        np.testing.assert_allclose(np.diff(samples.t), 1.0 / (m - 1), atol=1e-12)
        np.testing.assert_allclose(samples.points[[0, -1]], chain.points[[0, -1]], atol=1e-9)
        gaps = np.hypot(*np.diff(samples.points, axis=0).T)
        assert np.all(gaps <= chain.length / (m - 1) + 1e-9)


class TestLossProperties:
    @property_settings
    @given(tube_pair())
    def test_direction_invariance(self, pair):
        pred, gt = pair
        cfg = LossConfig(sigma_abs=gt.radius)
        assert loss_axis(pred.axis.reversed(), gt.axis, cfg) == pytest.approx(loss_axis(pred.axis, gt.axis, cfg), abs=1e-9)
        assert loss_endpoints(pred.axis.reversed(), gt.axis) == pytest.approx(loss_endpoints(pred.axis, gt.axis))

    @property_settings
    @given(tube_pair(), st.floats(min_value=0.2, max_value=20.0))
    def test_scale_covariance(self, pair, scale):
        pred, gt = pair
        big_pred, big_gt = pred.transformed(0.0, scale), gt.transformed(0.0, scale)
        assert s_abs(big_pred.axis, big_gt.axis, gt.radius * scale) == pytest.approx(
            s_abs(pred.axis, gt.axis, gt.radius), abs=1e-9)
        assert s_tan(big_pred.axis, big_gt.axis) == pytest.approx(s_tan(pred.axis, gt.axis), abs=1e-9)
        assert loss_radius(big_pred.radius, big_gt.radius) == pytest.approx(scale * loss_radius(pred.radius, gt.radius))
        assert loss_endpoints(big_pred.axis, big_gt.axis) == pytest.approx(scale * loss_endpoints(pred.axis, gt.axis))

    @property_settings
    @given(st.floats(min_value=0.01, max_value=3.0))
    def test_proximity_kernel_decreases_with_offset(self, offset):
        base = PolyChain([(0.0, 0.0), (10.0, 0.0)])
        near = PolyChain([(0.0, offset), (10.0, offset)])
        far = PolyChain([(0.0, 1.5 * offset), (10.0, 1.5 * offset)])
        assert s_abs(far, base, 1.0) < s_abs(near, base, 1.0)


class TestProtocolProperties:
    @property_settings
    @given(st.lists(st.tuples(st.floats(min_value=0.01, max_value=1.0), st.booleans()), min_size=1, max_size=30),
           st.integers(min_value=1, max_value=20))
    def test_max_f_ignores_trailing_zero_score_false_positives(self, ranked, extra):
        ranked = sorted(ranked, key=lambda item: -item[0])
        n_gt = max(1, sum(tp for _, tp in ranked))
        labels = [MatchLabel(score, tp, i) for i, (score, tp) in enumerate(ranked)]
        padded = labels + [MatchLabel(0.0, False, len(labels) + k) for k in range(extra)]
        assert pr_curve(padded, n_gt).max_f == pytest.approx(pr_curve(labels, n_gt).max_f)
