"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_X_y


def check_training_data(X, y, *, min_classes: int = 1):
    X, y = check_X_y(X, y, dtype=np.float64, ensure_all_finite=True, y_numeric=False)
    classes = np.unique(y)
    if classes.shape[0] < min_classes:
        raise ValueError(
            f"need at least {min_classes} distinct identities, got {classes.shape[0]}"
        )
    return X, y, classes


def check_features(X, n_features: int):
    """Validate a query matrix (or a single vector) against the trained width."""
    X = np.asarray(X)
    single = X.ndim == 1
    X = check_array(np.atleast_2d(X), dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != n_features:
        raise ValueError(f"dimension mismatch: expected {n_features} features, got {X.shape[1]}")
    return X, single
