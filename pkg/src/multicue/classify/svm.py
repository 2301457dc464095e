"""One-versus-rest linear SVM gallery classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_features, check_training_data
from ._dual_cd import primal_objective, solve_binary

BACKGROUND = "-"


@dataclass(frozen=True)
class GalleryModel:
    """K linear score functions ``S_k(x) = w_k . x + b_k`` over one feature space."""

    identities: tuple
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != len(self.identities) or b.shape != (W.shape[0],):
            raise ValueError("weights must be K x D and biases length K")
        if len(self.identities) < 2:
            raise ValueError("a gallery needs at least two identities")
        if not (np.isfinite(W).all() and np.isfinite(b).all()):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "identities", tuple(self.identities))
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GalleryModel):
            return NotImplemented
        return (
            self.identities == other.identities
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.biases, other.biases)
        )


def score(model: GalleryModel, x) -> np.ndarray:
    """Per-identity scores for one vector (shape K) or a matrix (shape n x K)."""
    X, single = check_features(x, model.feature_dim)
    S = X @ model.weights.T + model.biases
    return S[0] if single else S


def predict_closed(model: GalleryModel, x):
    S = np.atleast_2d(score(model, x))
    labels = np.asarray(model.identities, dtype=object)[np.argmax(S, axis=1)]
    return labels[0] if np.ndim(x) == 1 else labels


def predict_open(model: GalleryModel, x, tau: float):
    """Closed-world argmax, except ``BACKGROUND`` where the best score is below ``tau``."""
    S = np.atleast_2d(score(model, x))
    labels = np.asarray(model.identities, dtype=object)[np.argmax(S, axis=1)]
    labels[S.max(axis=1) < tau] = BACKGROUND
    return labels[0] if np.ndim(x) == 1 else labels


class OneVsRestLinearSVC(ClassifierMixin, BaseEstimator):
    """Linear SVM trained one identity against the rest.

    Each binary problem minimises ``0.5 ||w||^2 + C * sum hinge`` by dual
    coordinate descent. The bias is the weight of a constant 1 feature and so
    is regularised together with ``w``.

    Parameters
    ----------
    C : float, default=1.0
        Hinge-loss weight.
    tol : float, default=1e-6
        Stop once a full epoch sees no projected-gradient entry above this.
    max_iter : int, default=1000
        Epoch cap per binary problem.
    random_state : int, default=0
        Seeds the per-epoch coordinate permutations.
    """

    def __init__(self, C=1.0, tol=1e-6, max_iter=1000, random_state=0):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        X, y, classes = check_training_data(X, y, min_classes=2)
        n_samples, n_features = X.shape
        Xa = np.hstack([X, np.ones((n_samples, 1))])

        K = classes.shape[0]
        coef = np.empty((K, n_features))
        intercept = np.empty(K)
        dual = np.empty((K, n_samples))
        n_iter = np.empty(K, dtype=np.int64)
        converged = np.empty(K, dtype=bool)
        for k, label in enumerate(classes):
            yk = np.where(y == label, 1.0, -1.0)
            rng = np.random.default_rng([int(self.random_state), k])
            w, alpha, epochs, ok = solve_binary(Xa, yk, self.C, self.tol, self.max_iter, rng)
            coef[k], intercept[k] = w[:-1], w[-1]
            dual[k], n_iter[k], converged[k] = alpha, epochs, ok

        self.classes_ = classes
        self.coef_ = coef
        self.intercept_ = intercept
        self.dual_coef_ = dual
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.n_features_in_ = n_features
        return self

    @property
    def gallery_(self) -> GalleryModel:
        check_is_fitted(self, "coef_")
        return GalleryModel(tuple(self.classes_.tolist()), self.coef_, self.intercept_)

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X, _ = check_features(X, self.n_features_in_)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        S = self.decision_function(X)
        return self.classes_[np.argmax(S, axis=1)]

    def predict_open(self, X, tau):
        S = self.decision_function(X)
        labels = self.classes_.astype(object)[np.argmax(S, axis=1)]
        labels[S.max(axis=1) < tau] = BACKGROUND
        return labels

    def objectives(self, X, y) -> np.ndarray:
        """Primal objective of each per-identity problem on ``(X, y)``."""
        check_is_fitted(self, "coef_")
        X, y, _ = check_training_data(X, y)
        Xa = np.hstack([X, np.ones((X.shape[0], 1))])
        out = np.empty(len(self.classes_))
        for k, label in enumerate(self.classes_):
            w = np.append(self.coef_[k], self.intercept_[k])
            out[k] = primal_objective(w, Xa, np.where(y == label, 1.0, -1.0), self.C)
        return out

    @classmethod
    def from_gallery(cls, model: GalleryModel, **params) -> "OneVsRestLinearSVC":
        est = cls(**params)
        est.classes_ = np.asarray(model.identities)
        est.coef_ = model.weights.copy()
        est.intercept_ = model.biases.copy()
        est.n_features_in_ = model.feature_dim
        return est
