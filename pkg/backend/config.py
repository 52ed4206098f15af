import os
from typing import Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _optional_float(name: str) -> Optional[float]:
    value = os.getenv(name, '').strip()
    return float(value) if value else None


class Config:
    """Configuration class for the tube parametrization toolkit"""

    # Medial axis / tube fitting
    N_POINTS = int(os.getenv('TUBE_N_POINTS', '5'))
    PRUNE_CLEARANCE_FRACTION = float(os.getenv('MEDIAL_PRUNE_FRACTION', '0.5'))
    BOUNDARY_SAMPLE_SPACING = _optional_float('MEDIAL_BOUNDARY_SPACING')  # None = auto
    RADIUS_SAMPLES = int(os.getenv('MEDIAL_RADIUS_SAMPLES', '100'))
    USE_PAIRED_MIDPOINTS = os.getenv('MEDIAL_PAIRED_MIDPOINTS', 'False').lower() == 'true'
    CAP_SEGMENTS = int(os.getenv('ENVELOPE_CAP_SEGMENTS', '8'))
    CAP_STYLE = os.getenv('ENVELOPE_CAP_STYLE', 'flat')  # Options: 'flat', 'round'
    CURVATURE_THRESHOLD = float(os.getenv('CURVATURE_THRESHOLD', '0.1'))

    # Tube loss
    LOSS_SAMPLES = int(os.getenv('TUBE_LOSS_SAMPLES', '100'))
    ALPHA = float(os.getenv('TUBE_ALPHA', '0.5'))
    SIGMA_ABS = _optional_float('TUBE_SIGMA_ABS')  # None = ground-truth radius
    SIGMA_TAN = float(os.getenv('TUBE_SIGMA_TAN', '0.5'))
    NORMALIZE_BY_RADIUS = os.getenv('TUBE_NORMALIZE_BY_RADIUS', 'False').lower() == 'true'
    SYMMETRIC_AXIS = os.getenv('TUBE_SYMMETRIC_AXIS', 'False').lower() == 'true'

    # Evaluation & post-processing
    EVAL_IOU_THRESHOLD = float(os.getenv('EVAL_IOU_THRESHOLD', '0.5'))
    EVAL_AP_METHOD = os.getenv('EVAL_AP_METHOD', 'all-points')  # Options: 'all-points', '11-point'
    NMS_IOU_THRESHOLD = float(os.getenv('NMS_IOU_THRESHOLD', '0.5'))
    SOFT_NMS_SIGMA = float(os.getenv('SOFT_NMS_SIGMA', '0.5'))
    SOFT_NMS_SCORE_FLOOR = float(os.getenv('SOFT_NMS_SCORE_FLOOR', '0.001'))
    SOFT_NMS_METHOD = os.getenv('SOFT_NMS_METHOD', 'gaussian')  # Options: 'gaussian', 'linear'

    # Acceptance harnesses
    GRADCHECK_TOLERANCE = float(os.getenv('GRADCHECK_TOLERANCE', '1e-4'))
    RANDOM_SEED = int(os.getenv('RANDOM_SEED', '0'))

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FORMAT = os.getenv('LOG_FORMAT', 'text')  # Options: 'text', 'json'

    @classmethod
    def validate(cls):
        """Validate configuration ranges"""
        checks = {
            'TUBE_N_POINTS': cls.N_POINTS >= 4,
            'TUBE_LOSS_SAMPLES': cls.LOSS_SAMPLES >= 2,
            'MEDIAL_RADIUS_SAMPLES': cls.RADIUS_SAMPLES >= 2,
            'MEDIAL_PRUNE_FRACTION': 0.0 < cls.PRUNE_CLEARANCE_FRACTION < 1.0,
            'MEDIAL_BOUNDARY_SPACING': cls.BOUNDARY_SAMPLE_SPACING is None or cls.BOUNDARY_SAMPLE_SPACING > 0,
            'ENVELOPE_CAP_SEGMENTS': cls.CAP_SEGMENTS >= 1,
            'ENVELOPE_CAP_STYLE': cls.CAP_STYLE in ('flat', 'round'),
            'CURVATURE_THRESHOLD': cls.CURVATURE_THRESHOLD >= 0,
            'TUBE_ALPHA': 0.0 <= cls.ALPHA <= 1.0,
            'TUBE_SIGMA_ABS': cls.SIGMA_ABS is None or cls.SIGMA_ABS > 0,
            'TUBE_SIGMA_TAN': cls.SIGMA_TAN > 0,
            'EVAL_IOU_THRESHOLD': 0.0 <= cls.EVAL_IOU_THRESHOLD <= 1.0,
            'EVAL_AP_METHOD': cls.EVAL_AP_METHOD in ('all-points', '11-point'),
            'NMS_IOU_THRESHOLD': 0.0 <= cls.NMS_IOU_THRESHOLD <= 1.0,
            'SOFT_NMS_SIGMA': cls.SOFT_NMS_SIGMA > 0,
            'SOFT_NMS_SCORE_FLOOR': 0.0 <= cls.SOFT_NMS_SCORE_FLOOR <= 1.0,
            'SOFT_NMS_METHOD': cls.SOFT_NMS_METHOD in ('gaussian', 'linear'),
            'GRADCHECK_TOLERANCE': cls.GRADCHECK_TOLERANCE > 0,
            'LOG_FORMAT': cls.LOG_FORMAT in ('text', 'json'),
        }

        invalid = [key for key, ok in checks.items() if not ok]

        if invalid:
            raise ValueError(f"Invalid configuration values: {', '.join(invalid)}")

        return True

    @classmethod
    def medial_config(cls, **overrides):
        """Build a MedialConfig from the environment, with keyword overrides"""
        from ml.medial.medial_axis import MedialConfig

        values = {
            'n_points': cls.N_POINTS,
            'boundary_sample_spacing': cls.BOUNDARY_SAMPLE_SPACING,
            'prune_clearance_fraction': cls.PRUNE_CLEARANCE_FRACTION,
            'cap_segments': cls.CAP_SEGMENTS,
            'radius_samples': cls.RADIUS_SAMPLES,
            'use_paired_midpoints': cls.USE_PAIRED_MIDPOINTS,
            'envelope_cap_style': cls.CAP_STYLE,
            'curvature_threshold': cls.CURVATURE_THRESHOLD,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return MedialConfig(**values)

    @classmethod
    def loss_config(cls, **overrides):
        """Build a LossConfig from the environment, with keyword overrides"""
        from ml.tube_loss.types import LossConfig

        values = {
            'alpha': cls.ALPHA,
            'sigma_abs': cls.SIGMA_ABS,
            'sigma_tan': cls.SIGMA_TAN,
            'n_samples': cls.LOSS_SAMPLES,
            'n_points': cls.N_POINTS,
            'normalize_by_radius': cls.NORMALIZE_BY_RADIUS,
            'symmetric_axis': cls.SYMMETRIC_AXIS,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return LossConfig(**values)


# Create config instance
config = Config()
