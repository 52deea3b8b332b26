"""Input validation helpers shared by the functional core and the estimators."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DataError, DomainError, ParameterError


def check_series(X, *, name: str = "X", allow_empty: bool = True) -> np.ndarray:
    """Return ``X`` as a 1-D float array of observations in [0, 1].

    Accepts a list, a 1-D array or a single-column 2-D array (the layout
    scikit-learn pipelines hand over). Values outside the unit interval are
    rejected, never clipped.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    elif arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise DataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        bad = arr[(arr < 0.0) | (arr > 1.0)][0]
        raise DomainError(f"{name} contains {bad!r}, outside [0, 1]")
    return arr


def check_unit(x: float, *, name: str = "x") -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"{name}={x!r} is outside [0, 1]")
    return x


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def check_positive(value: float, *, name: str, strict: bool = True) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ParameterError(f"{name} must be finite and {bound}, got {value!r}")
    return value


def check_count(value, *, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
