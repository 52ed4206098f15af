"""Small builders shared by the test suites"""

import numpy as np

from ml.geometry import PolyChain
from ml.medial import Tube


def shifted(tube: Tube, dx: float = 0.0, dy: float = 0.0, radius: float = None) -> Tube:
    """Copy of a tube with its axis translated and optionally a new radius"""
    return Tube(PolyChain(tube.axis.points + np.array([dx, dy]), strict=False),
                tube.radius if radius is None else radius)


def capsule(x0: float, x1: float, y: float = 0.0, radius: float = 1.0) -> Tube:
    """Straight horizontal tube with five uniformly spread medial points"""
    xs = np.linspace(x0, x1, 5)
    return Tube(PolyChain(np.column_stack((xs, np.full(5, y)))), radius)
