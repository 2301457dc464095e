"""Breakdowns of two-fold results: per identity, per subset, relative to a
reference, across viewpoints, and against the training-set size.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .._seeding import derived_rng
from ..corpus import Corpus
from ..pipeline import FeatureBank, Method
from ..splits import SplitAssignment
from .closed import FoldResult, TwoFoldResult, fit_predict_fold, labelled_rows

RESOLUTION_THRESHOLDS = (50, 100, 200)


def _fold_results(results) -> Sequence[FoldResult]:
    if isinstance(results, TwoFoldResult):
        return results.folds
    if isinstance(results, FoldResult):
        return (results,)
    return tuple(results)


@dataclass(frozen=True)
class IdentityAccuracy:
    per_identity: dict[str, float]
    counts: dict[str, int]

    @property
    def curve(self) -> list[float]:
        """Per-identity accuracies, best first."""
        return sorted(self.per_identity.values(), reverse=True)

    @property
    def n_perfect(self) -> int:
        return sum(1 for a in self.per_identity.values() if a == 1.0)

    @property
    def n_zero(self) -> int:
        return sum(1 for a in self.per_identity.values() if a == 0.0)


def per_identity_accuracy(results) -> IdentityAccuracy:
    """Correct/total per identity, pooled over the test instances of all folds."""
    correct: dict[str, int] = defaultdict(int)
    total: dict[str, int] = defaultdict(int)
    for fold in _fold_results(results):
        for t, p in zip(fold.y_true.tolist(), fold.y_pred.tolist()):
            total[t] += 1
            correct[t] += int(t == p)
    keys = sorted(total)
    return IdentityAccuracy({k: correct[k] / total[k] for k in keys}, {k: total[k] for k in keys})


@dataclass(frozen=True)
class SubsetAccuracy:
    tag: str
    n: int
    n_correct: int

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n if self.n else float("nan")


def subset_accuracy(results, partition: Mapping[str, str]) -> dict[str, SubsetAccuracy]:
    """Accuracy within each tag of ``partition`` (instance id -> tag)."""
    n: dict[str, int] = defaultdict(int)
    hit: dict[str, int] = defaultdict(int)
    for fold in _fold_results(results):
        for iid, t, p in zip(fold.instance_ids, fold.y_true.tolist(), fold.y_pred.tolist()):
            try:
                tag = partition[iid]
            except KeyError:
                raise KeyError(f"partition has no tag for test instance {iid!r}") from None
            n[tag] += 1
            hit[tag] += int(t == p)
    return {tag: SubsetAccuracy(tag, n[tag], hit[tag]) for tag in sorted(n)}


def viewpoint_tags(corpus: Corpus) -> dict[str, str]:
    return {inst.instance_id: inst.viewpoint.value for inst in corpus}


def resolution_bin(height: float, thresholds: Sequence[float] = RESOLUTION_THRESHOLDS) -> str:
    edges = list(thresholds)
    for i, edge in enumerate(edges):
        if height < edge:
            return f"<{edge}" if i == 0 else f"{edges[i - 1]}-{edge}"
    return f">={edges[-1]}"


def resolution_tags(corpus: Corpus, thresholds: Sequence[float] = RESOLUTION_THRESHOLDS) -> dict[str, str]:
    """Bin instances by head height in pixels: len(thresholds) + 1 bins."""
    return {inst.instance_id: resolution_bin(inst.head.h, thresholds) for inst in corpus}


def relative_accuracy(accuracies: Mapping[str, float], reference: float) -> dict[str, float]:
    if reference == 0:
        raise ZeroDivisionError("reference accuracy is zero")
    return {name: acc / reference for name, acc in accuracies.items()}


def _restricted_fold(estimator, X, y, ids, folds, train_fold, train_ok, test_ok) -> Optional[FoldResult]:
    train_mask = (folds == train_fold) & train_ok
    test_mask = (folds == 1 - train_fold) & test_ok
    if not train_mask.any() or not test_mask.any():
        return None
    if len(np.unique(y[train_mask])) < 2:
        return None
    with warnings.catch_warnings():
        # restricting to one viewpoint routinely leaves identities without training data
        warnings.simplefilter("ignore", UserWarning)
        fold = fit_predict_fold(estimator, X, y, ids, train_mask, test_mask, train_fold)
    return fold if len(fold.y_true) else None


def cross_viewpoint_matrix(
    corpus: Corpus,
    split: SplitAssignment,
    bank: FeatureBank,
    method: Method,
    train_tags: Sequence[str],
    test_tags: Sequence[str],
    tags: Optional[Mapping[str, str]] = None,
) -> dict[tuple[str, str], Optional[float]]:
    """Accuracy when training only on ``train_tag`` instances and testing on ``test_tag`` ones.

    Each cell averages the available directions of the two-fold protocol;
    cells with no usable training data are ``None``.
    """
    tags = viewpoint_tags(corpus) if tags is None else tags
    ids, y, folds = labelled_rows(corpus, split)
    X = bank.matrix(method.all_cues, ids)
    row_tags = np.array([tags[i] for i in ids], dtype=object)
    estimator = method.make_estimator(bank)
    out: dict[tuple[str, str], Optional[float]] = {}
    for tr in train_tags:
        for te in test_tags:
            accs = []
            for train_fold in (0, 1):
                fold = _restricted_fold(estimator, X, y, ids, folds, train_fold, row_tags == tr, row_tags == te)
                if fold is not None:
                    accs.append(fold.accuracy)
            out[(tr, te)] = float(np.mean(accs)) if accs else None
    return out


@dataclass(frozen=True)
class SweepPoint:
    n: int
    mean_acc: float
    std_acc: float
    runs: tuple[float, ...]


def sample_count_sweep(
    corpus: Corpus,
    split: SplitAssignment,
    bank: FeatureBank,
    method: Method,
    counts: Sequence[int],
    runs: int = 10,
    seed: int = 0,
) -> list[SweepPoint]:
    """Accuracy with ``n`` training instances per identity, over ``runs`` random subsets.

    Identities with fewer than ``n`` training instances keep all of them. Each
    run is a full two-fold evaluation; the spread is the population standard
    deviation over runs.
    """
    if any(n <= 0 for n in counts):
        raise ValueError("sample counts must be positive")
    ids, y, folds = labelled_rows(corpus, split)
    X = bank.matrix(method.all_cues, ids)
    estimator = method.make_estimator(bank)
    test_all = np.ones(len(ids), dtype=bool)
    out = []
    for n in counts:
        accs = []
        for run in range(runs):
            fold_accs = []
            for train_fold in (0, 1):
                train_ok = np.zeros(len(ids), dtype=bool)
                for identity in np.unique(y):
                    members = np.flatnonzero((y == identity) & (folds == train_fold))
                    if len(members) > n:
                        rng = derived_rng(seed, "sweep", n, run, train_fold, str(identity))
                        members = np.sort(rng.choice(members, size=n, replace=False))
                    train_ok[members] = True
                fold = fit_predict_fold(estimator, X, y, ids, train_ok, (folds == 1 - train_fold) & test_all, train_fold)
                fold_accs.append(fold.accuracy)
            accs.append(float(np.mean(fold_accs)))
        out.append(SweepPoint(int(n), float(np.mean(accs)), float(np.std(accs)), tuple(accs)))
    return out

