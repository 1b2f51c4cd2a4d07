"""Small argument checks reused across modules."""
import math
import numbers

import numpy as np

from .exceptions import EmptyInput, InvalidDimensions, InvalidRadius


def check_radius(eps, name="eps", upper=1.0):
    """Return ``eps`` as float, requiring ``0 <= eps < upper``."""
    if not isinstance(eps, numbers.Real) or math.isnan(eps):
        raise InvalidRadius(f"{name} must be a real number, got {eps!r}")
    eps = float(eps)
    if not 0.0 <= eps < upper:
        raise InvalidRadius(f"{name} must lie in [0, {upper:g}), got {eps!r}")
    return eps


def check_exponent(p):
    p = float(p)
    if not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"exponent p must be a finite real >= 1, got {p!r}")
    return p


def check_points(points, dim=None):
    """Coerce to a finite 2-D float array of shape (n, d)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InvalidDimensions(f"points must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyInput("no points given")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points contain NaN or Inf")
    if dim is not None and arr.shape[1] != dim:
        raise InvalidDimensions(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


def check_random_state(seed):
    """Return a numpy Generator for an int seed, None, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
