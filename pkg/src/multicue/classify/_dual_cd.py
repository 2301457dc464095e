"""Dual coordinate descent for the L2-regularised L1-hinge linear SVM.

Solves, for labels ``y`` in {-1, +1},

    min_w  0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i * w.x_i)

through its box-constrained dual ``0 <= alpha_i <= C`` with
``w = sum_i alpha_i y_i x_i``. The bias lives in ``w`` as the weight of a
constant feature appended by the caller.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


@njit(cache=True)
def _epoch(X, y, C, sq_norms, order, w, alpha):
    """One pass over ``order``; returns the largest projected-gradient magnitude seen."""
    n_features = X.shape[1]
    max_violation = 0.0
    for s in range(order.shape[0]):
        i = order[s]
        margin = 0.0
        for j in range(n_features):
            margin += w[j] * X[i, j]
        grad = y[i] * margin - 1.0
        a = alpha[i]
        if a == 0.0:
            pg = min(grad, 0.0)
        elif a == C:
            pg = max(grad, 0.0)
        else:
            pg = grad
        if abs(pg) > max_violation:
            max_violation = abs(pg)
        if pg != 0.0:
            a_new = min(max(a - grad / sq_norms[i], 0.0), C)
            step = (a_new - a) * y[i]
            if step != 0.0:
                for j in range(n_features):
                    w[j] += step * X[i, j]
            alpha[i] = a_new
    return max_violation


def solve_binary(X, y, C, tol, max_epochs, rng):
    """Train one binary problem on augmented features.

    Returns ``(w, alpha, n_epochs, converged)``. Coordinates are visited in a
    fresh random permutation each epoch; training stops once an entire epoch
    sees no KKT violation above ``tol``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n_samples, n_features = X.shape
    sq_norms = np.einsum("ij,ij->i", X, X)
    w = np.zeros(n_features, dtype=np.float64)
    alpha = np.zeros(n_samples, dtype=np.float64)
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n_samples).astype(np.int64)
        if _epoch(X, y, float(C), sq_norms, order, w, alpha) < tol:
            return w, alpha, epoch, True
    return w, alpha, max_epochs, False


def primal_objective(w, X, y, C) -> float:
    """0.5 ||w||^2 + C * total hinge loss, with ``X`` already augmented."""
    margins = y * (X @ w)
    return float(0.5 * w @ w + C * np.maximum(0.0, 1.0 - margins).sum())


def dual_objective(alpha, X, y) -> float:
    """Dual value ``sum(alpha) - 0.5 ||w(alpha)||^2``; a lower bound on the primal optimum."""
    w = (alpha * y) @ X
    return float(alpha.sum() - 0.5 * w @ w)
