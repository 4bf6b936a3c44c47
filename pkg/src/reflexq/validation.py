"""Small input-validation helpers used across the package."""

import numpy as np

from .errors import InvalidParameterError


def check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_non_negative(name, value):
    if not np.isfinite(value) or value < 0:
        raise InvalidParameterError(f"{name} must be a non-negative finite number, got {value!r}")
    return float(value)


def check_finite_array(name, values, ndim=None):
    arr = np.asarray(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidParameterError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite values")
    return arr


def check_state_matrix(X, n_features):
    """Validate a batch of observation vectors, shape (n_samples, n_features)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise InvalidParameterError(
            f"expected observations of shape (n, {n_features}), got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError("observations contain non-finite values")
    return X
