"""Unit tests for the tube loss terms, gradient and descent"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from ml.geometry import PolyChain
from ml.medial import Tube
from ml.tube_loss import (
    DescentDivergedError,
    LossConfig,
    LossConfigError,
    fit_tube_descent,
    grad_loss_tube,
    loss_axis,
    loss_endpoints,
    loss_keypoints,
    loss_radius,
    loss_spread,
    loss_tube,
    s_abs,
    s_tan,
)
import ml.tube_loss.descent as descent_module
from ml.tube_loss.descent import CONVERGED, STALLED
from tests.helpers import shifted

GT = PolyChain([(0, 0), (10, 0)])
OFFSET = PolyChain([(0, 1), (10, 1)])


class TestLossConfig:
    def test_defaults(self):
        cfg = LossConfig()
        assert cfg.alpha == 0.5
        assert cfg.sigma_tan == 0.5
        assert cfg.n_samples == 100
        assert cfg.sigma_for(3.0) == 3.0

    def test_invalid_values_listed(self):
        with pytest.raises(LossConfigError, match="alpha.*sigma_tan"):
            LossConfig(alpha=1.5, sigma_tan=0.0)


class TestKernels:
    def test_identical_chains(self):
        assert s_abs(GT, GT, 1.0) == pytest.approx(1.0)
        assert s_tan(GT, GT) == pytest.approx(1.0)

    def test_constant_offset(self):
        assert s_abs(OFFSET, GT, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_kernel_saturation(self):
        pred = PolyChain([(3, 40), (25, -7), (31, 2)])
        assert s_abs(pred, GT, 1e6) == pytest.approx(1.0, abs=1e-9)

    def test_perpendicular(self):
        pred = PolyChain([(5, -5), (5, 5)])
        assert s_tan(pred, GT, 0.5) == pytest.approx(math.exp(-2.0), abs=1e-12)

    def test_reversed_direction_costs_nothing(self):
        assert s_tan(GT.reversed(), GT) == pytest.approx(1.0)

    def test_collapsed_leading_point_keeps_tangent(self):
        pred = PolyChain([(0, 0), (0, 0), (0, 5), (0, 10)], strict=False)
        gt = PolyChain([(0, 0), (0, 10)])
        assert s_tan(pred, gt) == pytest.approx(1.0, abs=1e-12)

    def test_bounds(self, rng):
        for _ in range(20):
            pred = PolyChain(rng.uniform(-10, 10, (4, 2)), strict=False)
            gt = PolyChain(rng.uniform(-10, 10, (5, 2)), strict=False)
            assert 0.0 <= s_abs(pred, gt, 2.0) <= 1.0
            assert 0.0 <= s_tan(pred, gt, 0.5) <= 1.0


class TestAxisTerm:
    def test_identical(self):
        assert loss_axis(GT, GT, LossConfig(alpha=0.5)) == pytest.approx(0.0, abs=1e-12)

    def test_parallel_offset(self):
        cfg = LossConfig(alpha=0.5, sigma_abs=1.0)
        expected = 1.0 - 0.5 * math.exp(-0.5) - 0.5
        assert loss_axis(OFFSET, GT, cfg) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.1967, abs=1e-4)

    def test_alpha_zero_is_tangent_only(self):
        pred = PolyChain([(0, 0), (5, 2), (10, 0)])
        cfg = LossConfig(alpha=0.0, sigma_abs=1.0)
        assert loss_axis(pred, GT, cfg) == pytest.approx(1.0 - s_tan(pred, GT, cfg.sigma_tan))

    def test_symmetric_axis_penalizes_short_prediction(self):
        short = PolyChain([(4, 0), (6, 0)])
        one_way = loss_axis(short, GT, LossConfig(sigma_abs=1.0))
        both_ways = loss_axis(short, GT, LossConfig(sigma_abs=1.0, symmetric_axis=True))
        assert one_way == pytest.approx(0.0, abs=1e-12)
        assert both_ways > 0.1


class TestOtherTerms:
    def test_spread_well_spread(self):
        pred = PolyChain([(0, 0), (2, 0), (4, 0), (6, 0), (8, 0)])
        assert loss_spread(pred, 8.0, 5) == 0.0

    def test_spread_coincident_points(self):
        pred = PolyChain([(0, 0), (2, 0), (2, 0), (6, 0), (8, 0)], strict=False)
        assert loss_spread(pred, 8.0, 5) == pytest.approx(1.0)

    def test_spread_at_threshold(self):
        pred = PolyChain([(0, 0), (1, 0), (3, 0), (5, 0), (8, 0)])
        assert loss_spread(pred, 8.0, 5) == 0.0

    def test_endpoints(self):
        assert loss_endpoints(GT, GT) == 0.0
        assert loss_endpoints(GT.reversed(), GT) == 0.0
        assert loss_endpoints(PolyChain([(1, 0), (10, 2)]), GT) == pytest.approx(3.0)

    @pytest.mark.parametrize('pred_r, gt_r, expected', [(2, 2, 0.0), (3, 2, 1.0), (0.5, 2, 1.5)])
    def test_radius(self, pred_r, gt_r, expected):
        assert loss_radius(pred_r, gt_r) == expected

    def test_keypoints_not_reparametrization_invariant(self):
        gt = PolyChain([(0, 0), (2.5, 0), (5, 0), (7.5, 0), (10, 0)])
        moved = PolyChain([(0, 0), (1, 0), (5, 0), (9, 0), (10, 0)])
        assert loss_axis(moved, gt, LossConfig(sigma_abs=1.0)) == pytest.approx(0.0, abs=1e-12)
        assert loss_keypoints(moved, gt) == pytest.approx(3.0 / 5.0)

    def test_keypoints_count_mismatch(self):
        with pytest.raises(LossConfigError):
            loss_keypoints(GT, PolyChain([(0, 0), (5, 0), (10, 0)]))


class TestLossTube:
    def test_identical(self, straight_gt):
        report = loss_tube(straight_gt, straight_gt)
        assert report.total == pytest.approx(0.0, abs=1e-12)

    def test_radius_only(self, straight_gt):
        report = loss_tube(shifted(straight_gt, radius=3.0), straight_gt)
        assert report.total == pytest.approx(1.0, abs=1e-12)
        assert report.radius_term == pytest.approx(1.0)

    def test_offset_axis(self, straight_gt):
        cfg = LossConfig(sigma_abs=1.0)
        report = loss_tube(shifted(straight_gt, dy=1.0), straight_gt, cfg)
        assert report.axis_term == pytest.approx(1.0 - 0.5 * math.exp(-0.5) - 0.5, abs=1e-12)
        assert report.endpoints_term == pytest.approx(2.0)
        assert report.total == pytest.approx(report.axis_term + 2.0)

    def test_point_count_mismatch(self, straight_gt):
        with pytest.raises(LossConfigError, match="5"):
            loss_tube(Tube(PolyChain([(0, 0), (5, 0), (10, 0)]), 2.0), straight_gt)

    def test_normalize_by_radius(self, straight_gt):
        cfg = LossConfig(normalize_by_radius=True)
        report = loss_tube(shifted(straight_gt, radius=3.0), straight_gt, cfg)
        assert report.radius_term == pytest.approx(0.5)


class TestGradient:
    def test_zero_at_minimum(self, straight_gt):
        grad = grad_loss_tube(straight_gt, straight_gt)
        assert grad.norm == pytest.approx(0.0, abs=1e-9)

    def test_uniform_offset_directional_derivative(self, straight_gt):
        cfg = LossConfig(alpha=0.5, sigma_abs=1.0, term_weights=(0.0, 1.0, 0.0, 0.0))
        grad = grad_loss_tube(shifted(straight_gt, dy=1.0), straight_gt, cfg)
        expected = 0.5 * 1.0 * math.exp(-0.5)
        assert float(grad.d_points[:, 1].sum()) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(0.3033, abs=1e-4)

    def test_radius_gradient_sign(self, straight_gt):
        grad = grad_loss_tube(shifted(straight_gt, radius=3.0), straight_gt)
        assert grad.d_radius == 1.0

    def test_flags_kink_at_minimum(self, straight_gt):
        grad = grad_loss_tube(straight_gt, straight_gt)
        assert grad.non_smooth
        assert any('radius' in reason for reason in grad.reasons)


class TestDescent:
    def test_start_at_ground_truth(self, straight_gt):
        result = fit_tube_descent(straight_gt, straight_gt)
        assert result.status == CONVERGED
        assert result.iterations == 0
        assert result.trajectory == []

    def test_radius_only_perturbation(self, straight_gt):
        result = fit_tube_descent(shifted(straight_gt, radius=2.6), straight_gt)
        assert result.tube.radius == pytest.approx(2.0, abs=1e-3)
        assert all(b <= a + 1e-12 for a, b in zip(result.trajectory, result.trajectory[1:]))

    def test_point_count_mismatch(self, straight_gt):
        with pytest.raises(LossConfigError):
            fit_tube_descent(Tube(PolyChain([(0, 0), (10, 0)]), 2.0), straight_gt)

    def test_invalid_step(self, straight_gt):
        with pytest.raises(ValueError):
            fit_tube_descent(straight_gt, straight_gt, step=0.0)

    def _loss_after_first_call(self, monkeypatch, candidate_total):
        """Report the true loss for the starting tube and candidate_total(loss) for every trial step"""
        real = descent_module.loss_tube
        calls = []

        def patched(tube, gt, cfg):
            report = real(tube, gt, cfg)
            calls.append(tube)
            if len(calls) == 1:
                return report
            return SimpleNamespace(total=candidate_total(report.total))

        monkeypatch.setattr(descent_module, 'loss_tube', patched)

    def test_no_decreasing_step_stalls_at_current_tube(self, monkeypatch, straight_gt):
        init = shifted(straight_gt, dy=0.5)
        self._loss_after_first_call(monkeypatch, lambda total: total + 1e-3)
        result = fit_tube_descent(init, straight_gt)
        assert result.status == STALLED
        assert result.iterations == 0
        assert result.trajectory == []
        np.testing.assert_allclose(result.tube.axis.points, init.axis.points)
        assert result.tube.radius == init.radius

    def test_non_finite_trial_losses_raise_with_last_tube(self, monkeypatch, straight_gt):
        init = shifted(straight_gt, dy=0.5)
        self._loss_after_first_call(monkeypatch, lambda total: float('nan'))
        with pytest.raises(DescentDivergedError) as info:
            fit_tube_descent(init, straight_gt)
        assert info.value.trajectory == []
        np.testing.assert_allclose(info.value.tube.axis.points, init.axis.points)
