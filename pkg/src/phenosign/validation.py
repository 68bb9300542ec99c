"""Input validation helpers used across estimators and functional APIs."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericalError


def check_fraction(value, name, *, allow_zero=True, allow_one=True):
    """Validate a scalar in [0, 1] (open ends configurable); return it as float."""
    v = float(value)
    lo_ok = v > 0.0 or (allow_zero and v == 0.0)
    hi_ok = v < 1.0 or (allow_one and v == 1.0)
    if not (np.isfinite(v) and lo_ok and hi_ok):
        lo = "[0" if allow_zero else "(0"
        hi = "1]" if allow_one else "1)"
        raise ConfigError(f"{name} must lie in {lo}, {hi}, got {value!r}")
    return v


def check_positive(value, name, *, integer=False):
    """Validate a strictly positive scalar; return float (or int)."""
    v = float(value)
    if not (np.isfinite(v) and v > 0):
        raise ConfigError(f"{name} must be > 0, got {value!r}")
    if integer:
        if v != int(v):
            raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        return int(v)
    return v


def check_choice(value, name, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_finite_array(values, name):
    """Require every entry of an array to be finite; return it as float64."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise NumericalError(f"{name} contains {bad} non-finite value(s)")
    return arr


def check_seed(value, name="rng_seed"):
    if not isinstance(value, (int, np.integer)) or int(value) < 0:
        raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)
