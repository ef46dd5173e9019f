"""Input validation shared by the estimators."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def check_matrix(X, allow_nan: bool = False) -> np.ndarray:
    """Coerce X to a 2-d float64 array, rejecting inf (and NaN unless allowed)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-d feature matrix, got shape {X.shape}")
    if np.isinf(X).any():
        raise ValidationError("feature matrix contains infinite values")
    if not allow_nan and np.isnan(X).any():
        raise ValidationError("feature matrix contains NaN; impute missing values first")
    return X


def check_binary_labels(y, n_samples: int, require_both: bool = False) -> np.ndarray:
    """Coerce labels to a 0/1 float vector of the expected length."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) != n_samples:
        raise ValidationError(f"X has {n_samples} rows but y has {len(y)} labels")
    if len(y) == 0:
        raise ValidationError("empty training set")
    values = set(np.unique(y).tolist())
    if not values <= {0.0, 1.0}:
        raise ValidationError(f"labels must be 0/1, got values {sorted(values)}")
    if require_both:
        for missing in (0.0, 1.0):
            if missing not in values:
                raise ValidationError(f"training set has no examples of label {int(missing)}")
    return y
