"""
Configuration and result types for the tube loss
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class LossConfigError(ValueError):
    """Raised for invalid loss hyperparameters or mismatched tube sizes"""


class DescentDivergedError(RuntimeError):
    """
    Raised when no trial step yields a finite loss

    Carries the accepted trajectory and the last accepted tube.
    """

    def __init__(self, message: str, trajectory: List[float], tube: Optional[Any] = None):
        super().__init__(message)
        self.trajectory = list(trajectory)
        self.tube = tube


@dataclass(frozen=True)
class LossConfig:
    """
    Tube loss hyperparameters

    sigma_abs=None uses the ground-truth tube radius as the proximity scale.
    term_weights are ordered (radius, axis, endpoints, spread).
    """
    alpha: float = 0.5
    sigma_abs: Optional[float] = None
    sigma_tan: float = 0.5
    n_samples: int = 100
    n_points: int = 5
    term_weights: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    symmetric_axis: bool = False
    normalize_by_radius: bool = False
    nonsmooth_tolerance: float = 1e-4

    def __post_init__(self):
        problems = []
        if not 0.0 <= self.alpha <= 1.0:
            problems.append(f"alpha must be in [0, 1], got {self.alpha}")
        if self.sigma_abs is not None and not self.sigma_abs > 0:
            problems.append(f"sigma_abs must be > 0, got {self.sigma_abs}")
        if not self.sigma_tan > 0:
            problems.append(f"sigma_tan must be > 0, got {self.sigma_tan}")
        if self.n_samples < 2:
            problems.append(f"n_samples must be >= 2, got {self.n_samples}")
        if self.n_points < 2:
            problems.append(f"n_points must be >= 2, got {self.n_points}")
        if len(self.term_weights) != 4 or any(w < 0 for w in self.term_weights):
            problems.append(f"term_weights must be four non-negative values, got {self.term_weights}")
        if not self.nonsmooth_tolerance > 0:
            problems.append(f"nonsmooth_tolerance must be > 0, got {self.nonsmooth_tolerance}")
        if problems:
            raise LossConfigError('; '.join(problems))
        object.__setattr__(self, 'term_weights', tuple(float(w) for w in self.term_weights))

    def sigma_for(self, gt_radius: float) -> float:
        return float(self.sigma_abs) if self.sigma_abs is not None else float(gt_radius)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['term_weights'] = list(self.term_weights)
        return data


@dataclass(frozen=True)
class LossReport:
    """Per-term tube loss values and their weighted total"""
    radius_term: float
    axis_term: float
    endpoints_term: float
    spread_term: float
    total: float
    s_abs: float
    s_tan: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class TubeGradient:
    """Gradient of the total loss with respect to the predicted tube"""
    d_points: np.ndarray  # (n, 2)
    d_radius: float
    non_smooth: bool = False
    reasons: Tuple[str, ...] = field(default_factory=tuple)

    def flat(self) -> np.ndarray:
        return np.concatenate((self.d_points.ravel(), [self.d_radius]))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))
