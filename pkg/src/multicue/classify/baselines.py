"""Reference classifiers: Euclidean nearest neighbour and the chance level."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_features, check_training_data


class NearestNeighborClassifier(ClassifierMixin, BaseEstimator):
    """Predict the identity of the closest training vector.

    Brute-force linear scan; on equal distances the earliest training sample
    wins.
    """

    def __init__(self, chunk_size=256):
        self.chunk_size = chunk_size

    def fit(self, X, y):
        X, y, classes = check_training_data(X, y, min_classes=1)
        self.X_ = X
        self.y_ = y
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        return self

    def kneighbors(self, X):
        """Index of, and squared distance to, the nearest training sample."""
        check_is_fitted(self, "X_")
        X, _ = check_features(X, self.n_features_in_)
        idx = np.empty(X.shape[0], dtype=np.int64)
        dist = np.empty(X.shape[0])
        for start in range(0, X.shape[0], self.chunk_size):
            q = X[start:start + self.chunk_size]
            # explicit differences, not the |a|^2 - 2ab + |b|^2 expansion, so ties stay exact
            d2 = ((q[:, None, :] - self.X_[None, :, :]) ** 2).sum(axis=2)
            j = np.argmin(d2, axis=1)
            idx[start:start + len(q)] = j
            dist[start:start + len(q)] = d2[np.arange(len(q)), j]
        return idx, dist

    def predict(self, X):
        idx, _ = self.kneighbors(X)
        return self.y_[idx]


class ChanceClassifier(ClassifierMixin, BaseEstimator):
    """Always predict the most frequent training identity (first label on ties)."""

    def fit(self, X, y):
        X, y, classes = check_training_data(X, y, min_classes=1)
        counts = np.array([(y == c).sum() for c in classes])
        self.classes_ = classes
        self.class_counts_ = counts
        self.mode_ = classes[int(np.argmax(counts))]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "mode_")
        n = np.atleast_2d(np.asarray(X)).shape[0]
        return np.full(n, self.mode_, dtype=self.classes_.dtype)
