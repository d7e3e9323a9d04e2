"""Small input-validation helpers shared by the estimator classes."""
from __future__ import annotations

import numpy as np


def check_finite_array(x, name="array", dtype=np.float64) -> np.ndarray:
    arr = np.asarray(x, dtype=dtype)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_vectors(x, name="X") -> np.ndarray:
    """Coerce to a finite 2-D float array of row vectors."""
    arr = check_finite_array(x, name)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n_samples, dim), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return arr


def check_positive_int(value, name) -> int:
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return int(value)
