"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class UnencodableQueryError(ValidationError):
    """Raised when a query has no in-vocabulary tokens and cannot be embedded."""


def check_fraction(value, name="fraction", inclusive=True):
    lo_ok = 0.0 <= value if inclusive else 0.0 < value
    hi_ok = value <= 1.0 if inclusive else value < 1.0
    if not (lo_ok and hi_ok):
        bounds = "[0, 1]" if inclusive else "(0, 1)"
        raise ValidationError(f"{name} must be in {bounds}, got {value!r}")
    return float(value)


def check_positive(value, name="value"):
    if not value > 0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    return value


def check_positive_int(value, name="value"):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValidationError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_finite_vector(vec, dim=None, name="vector"):
    """Coerce to a 1-D float array and verify every entry is finite."""
    arr = np.asarray(vec, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValidationError(f"{name} must have dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_matrix(mat, shape=None, name="matrix"):
    arr = np.asarray(mat, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValidationError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr
