"""Input validation helpers for array-facing entry points."""

import numpy as np

from .errors import DataError, ShapeError


def check_signals(X, dtype=np.float32):
    """Coerce X to a (n_samples, length) float array.

    Accepts (n, length) or (n, 1, length); rejects anything else or
    non-finite values.
    """
    X = np.asarray(X)
    if X.ndim == 3:
        if X.shape[1] != 1:
            raise ShapeError(f"expected single-channel signals, got {X.shape[1]} channels")
        X = X[:, 0, :]
    if X.ndim != 2:
        raise ShapeError(f"expected 2d (n, length) or 3d (n, 1, length) input, got ndim={X.ndim}")
    X = np.ascontiguousarray(X, dtype=dtype)
    if not np.all(np.isfinite(X)):
        raise DataError("input signals contain non-finite values")
    return X


def check_labels(y, n_samples):
    """Coerce y to a (n_samples,) int64 vector."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"labels must be 1d, got ndim={y.ndim}")
    if y.shape[0] != n_samples:
        raise ShapeError(f"{y.shape[0]} labels for {n_samples} samples")
    if not np.issubdtype(y.dtype, np.integer):
        yi = y.astype(np.int64)
        if not np.array_equal(yi, y):
            raise DataError("labels must be integers")
        y = yi
    return y.astype(np.int64)


def check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ShapeError(f"{name} must be strictly positive, got {value}")
    return value
