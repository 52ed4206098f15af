"""
Medial axis extraction, tube fitting and envelope reconstruction
"""

from .medial_axis import (
    CURVED,
    STRAIGHT,
    FIT_CAP_STYLE,
    MedialAxisError,
    MedialConfig,
    boundary_spacing,
    classify_curvature,
    extend_to_boundary,
    extract_medial_axis,
    max_angle_difference,
    paired_midpoint_axis,
    pruned_medial_chain,
    resample_boundary,
)
from .tube import (
    Tube,
    TubeFit,
    clearance_profile,
    estimate_radius,
    fit_tube,
    fit_tube_detailed,
    radius_variation,
)
from .envelope import EnvelopeError, tube_envelope

__all__ = [
    'CURVED', 'STRAIGHT', 'FIT_CAP_STYLE', 'MedialAxisError', 'MedialConfig', 'boundary_spacing',
    'classify_curvature', 'extend_to_boundary', 'extract_medial_axis', 'max_angle_difference',
    'paired_midpoint_axis', 'pruned_medial_chain', 'resample_boundary',
    'Tube', 'TubeFit', 'clearance_profile', 'estimate_radius', 'fit_tube', 'fit_tube_detailed',
    'radius_variation', 'EnvelopeError', 'tube_envelope',
]
