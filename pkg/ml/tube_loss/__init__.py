"""
Parametrization-invariant tube loss, its gradient and a descent fitter
"""

from .types import DescentDivergedError, LossConfig, LossConfigError, LossReport, TubeGradient
from .kernels import KernelEval, evaluate_kernels, s_abs, s_tan
from .tube_loss import (
    loss_axis,
    loss_endpoints,
    loss_keypoints,
    loss_radius,
    loss_spread,
    loss_tube,
)
from .gradient import (
    FrozenObjective,
    GradCheckReport,
    finite_difference_gradient,
    grad_loss_tube,
    gradient_check,
    relative_error,
)
from .descent import DescentResult, fit_tube_descent

__all__ = [
    'DescentDivergedError', 'LossConfig', 'LossConfigError', 'LossReport', 'TubeGradient',
    'KernelEval', 'evaluate_kernels', 's_abs', 's_tan',
    'loss_axis', 'loss_endpoints', 'loss_keypoints', 'loss_radius', 'loss_spread', 'loss_tube',
    'FrozenObjective', 'GradCheckReport', 'finite_difference_gradient', 'grad_loss_tube',
    'gradient_check', 'relative_error', 'DescentResult', 'fit_tube_descent',
]
