"""Real-branch special functions: principal Lambert W and log-gamma."""

import math

import numpy as np

from ._backend import kernels
from .errors import DomainError

BRANCH_POINT = -math.exp(-1.0)
BRANCH_SLACK = 1e-12


def lambert_w0(x: float) -> float:
    """Principal branch W0 of the inverse of w*exp(w).

    Halley iteration started from log(1 + x) (or a branch-point series near
    -1/e, or the log-log asymptote for large x). Arguments within 1e-12 below
    -1/e snap to the branch value -1.

    Raises DomainError for x < -1/e - 1e-12.
    """
    x = float(x)
    if math.isnan(x) or x < BRANCH_POINT - BRANCH_SLACK:
        raise DomainError(f"lambert_w0 undefined for x = {x!r} < -1/e")
    return float(kernels().lambert_w0(np.array([x]))[0])


def lambert_w0_array(x):
    """Vectorised :func:`lambert_w0`; same domain rule."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x) | (x < BRANCH_POINT - BRANCH_SLACK)):
        raise DomainError("lambert_w0 undefined below -1/e")
    return kernels().lambert_w0(x).reshape(x.shape)


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)
