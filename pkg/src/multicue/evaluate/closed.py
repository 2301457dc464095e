"""Closed-world two-fold protocol: train on one fold, test on the other, both ways."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import clone

from ..corpus import Corpus
from ..pipeline import FeatureBank, Method
from ..splits import SplitAssignment


@dataclass(frozen=True)
class FoldResult:
    """Predictions of the model trained on ``train_fold`` over the other fold."""

    train_fold: int
    instance_ids: tuple[str, ...]
    y_true: np.ndarray
    y_pred: np.ndarray

    @property
    def test_fold(self) -> int:
        return 1 - self.train_fold

    @property
    def n_correct(self) -> int:
        return int((self.y_true == self.y_pred).sum())

    @property
    def accuracy(self) -> float:
        if len(self.y_true) == 0:
            return float("nan")
        return self.n_correct / len(self.y_true)


@dataclass(frozen=True)
class TwoFoldResult:
    folds: tuple[FoldResult, FoldResult]

    @property
    def accuracy(self) -> float:
        """Arithmetic mean of the two fold accuracies."""
        return (self.folds[0].accuracy + self.folds[1].accuracy) / 2


def gallery_filter(y_train, y_test) -> np.ndarray:
    """Mask of test samples whose identity has training data.

    Identities missing from the training side are left out of that
    direction's gallery, and so are their probes.
    """
    gallery = set(np.asarray(y_train).tolist())
    keep = np.array([label in gallery for label in np.asarray(y_test).tolist()], dtype=bool)
    if not keep.all():
        missing = sorted(set(np.asarray(y_test)[~keep].tolist()))
        warnings.warn(f"{len(missing)} identities absent from the training fold: {missing[:5]}", stacklevel=3)
    return keep


def fit_predict_fold(estimator, X, y, ids, train_mask, test_mask, train_fold) -> FoldResult:
    train_idx = np.flatnonzero(train_mask)
    test_idx = np.flatnonzero(test_mask)
    keep = gallery_filter(y[train_idx], y[test_idx])
    test_idx = test_idx[keep]
    model = clone(estimator).fit(X[train_idx], y[train_idx])
    y_pred = model.predict(X[test_idx]) if len(test_idx) else np.array([], dtype=y.dtype)
    return FoldResult(train_fold, tuple(ids[i] for i in test_idx), y[test_idx], np.asarray(y_pred))


def two_fold(estimator, X, y, folds, ids: Optional[Sequence[str]] = None) -> TwoFoldResult:
    """Two-fold evaluation on arrays; ``folds`` holds 0, 1, or -1 for unused rows."""
    X = np.asarray(X)
    y = np.asarray(y)
    folds = np.asarray(folds)
    ids = list(ids) if ids is not None else [str(i) for i in range(len(y))]
    results = tuple(
        fit_predict_fold(estimator, X, y, ids, folds == i, folds == 1 - i, i) for i in (0, 1)
    )
    return TwoFoldResult(results)


def labelled_rows(corpus: Corpus, split: SplitAssignment, restrict=None):
    """(instance ids, identity labels, fold array) over the split's assigned instances."""
    ids, labels, folds = [], [], []
    for inst in corpus:
        fold = split.assignment.get(inst.instance_id)
        if fold is None or inst.identity is None:
            continue
        if restrict is not None and not restrict(inst):
            continue
        ids.append(inst.instance_id)
        labels.append(inst.identity)
        folds.append(fold)
    return ids, np.array(labels, dtype=object).astype(str), np.array(folds, dtype=np.int64)


def run_two_fold(corpus: Corpus, split: SplitAssignment, bank: FeatureBank, method: Method) -> TwoFoldResult:
    ids, y, folds = labelled_rows(corpus, split)
    X = bank.matrix(method.all_cues, ids)
    return two_fold(method.make_estimator(bank), X, y, folds, ids)
