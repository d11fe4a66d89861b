from django.conf import settings

PROBABILITY_TOLERANCE = getattr(settings, 'PROBABILITY_TOLERANCE', 1e-9)
CONSISTENCY_TOLERANCE = getattr(settings, 'CONSISTENCY_TOLERANCE', 1e-9)
KL_SMOOTHING = getattr(settings, 'KL_SMOOTHING', 1e-9)

# Exogenous tabular laws must sum to one within this
PMF_TOLERANCE = 1e-12


def close(a: float, b: float, tol: float = PROBABILITY_TOLERANCE) -> bool:
    return abs(a - b) <= tol
