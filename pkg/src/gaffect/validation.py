"""Input validation helpers used across the package."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError


def as_float_vector(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def as_float_matrix(values, name: str = "values") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str = "values") -> np.ndarray:
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def check_labels(y, n_classes: int, name: str = "labels") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not (
        np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating)
    ):
        raise InvalidInputError(f"{name} must be integers")
    out = arr.astype(np.int64, copy=False)
    if arr.size and (np.asarray(arr, dtype=np.float64) != out).any():
        raise InvalidInputError(f"{name} must be integers")
    if out.size and (out.min() < 0 or out.max() >= n_classes):
        raise InvalidInputError(f"{name} must lie in [0, {n_classes})")
    return out


def check_proba(vec, n_classes: int = 3, tol: float = 1e-6, name: str = "score") -> np.ndarray:
    arr = as_float_vector(vec, name)
    if arr.shape[0] != n_classes:
        raise InvalidInputError(f"{name} must have {n_classes} entries, got {arr.shape[0]}")
    check_finite(arr, name)
    if (arr < 0).any():
        raise InvalidInputError(f"{name} has negative entries")
    if abs(float(arr.sum()) - 1.0) > tol:
        raise InvalidInputError(f"{name} must sum to 1 within {tol}, got {float(arr.sum())!r}")
    return arr
