"""Shared fixtures for the test suites"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from ml.geometry import PolyChain, Polygon
from ml.medial import Tube


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def rect_10x4():
    return Polygon([(0, 0), (10, 0), (10, 4), (0, 4)])


@pytest.fixture
def straight_gt():
    """Five uniformly spread medial points on (0,0)-(10,0), radius 2"""
    return Tube(PolyChain([(0, 0), (2.5, 0), (5, 0), (7.5, 0), (10, 0)]), 2.0)

