"""Open-world recognition: gallery-vs-background screening by thresholding the
best SVM score, measured as recognition recall against false positives per image.

An instance is a foreground prediction when its best score is at least
``tau``. Among gallery probes, foreground predictions split into sound
(argmax identity correct) and unsound true positives; gallery probes below
the threshold are false negatives. Background instances predicted as
foreground are false positives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import clone

from ..classify.svm import GalleryModel, score
from ..corpus import Corpus
from ..pipeline import FeatureBank, Method
from ..splits import SplitAssignment


@dataclass(frozen=True)
class OpenWorldCounts:
    tau: float
    tp_sound: int
    tp_unsound: int
    fp: int
    fn: int
    n_images: int
    n_eval: int

    def __post_init__(self):
        if self.tp_sound + self.tp_unsound + self.fn != self.n_eval:
            raise AssertionError("TP_s + TP_u + FN must equal the evaluated gallery probes")

    @property
    def rr(self) -> float:
        return self.tp_sound / self.n_eval

    @property
    def fppi(self) -> float:
        return self.fp / self.n_images


@dataclass(frozen=True)
class CurvePoint:
    tau: float
    rr: float
    fppi: float


def _best(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    if scores.shape[0] == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    return scores.max(axis=1), scores.argmax(axis=1)


def _prepare(gallery_scores, gallery_labels, identities, background_scores):
    g_max, g_arg = _best(gallery_scores)
    ident = np.asarray(list(identities), dtype=object)
    correct = ident[g_arg] == np.asarray(gallery_labels, dtype=object) if len(g_max) else np.empty(0, dtype=bool)
    b_max, _ = _best(background_scores) if len(background_scores) else (np.empty(0), None)
    return g_max, np.asarray(correct, dtype=bool), b_max


def open_world_counts(
    gallery_scores,
    gallery_labels: Sequence,
    identities: Sequence,
    background_scores,
    tau: float,
    n_images: int,
) -> OpenWorldCounts:
    g_max, correct, b_max = _prepare(gallery_scores, gallery_labels, identities, background_scores)
    fg = g_max >= tau
    return OpenWorldCounts(
        tau=float(tau),
        tp_sound=int((fg & correct).sum()),
        tp_unsound=int((fg & ~correct).sum()),
        fp=int((b_max >= tau).sum()),
        fn=int((~fg).sum()),
        n_images=int(n_images),
        n_eval=len(g_max),
    )


def step_grid(gallery_scores, background_scores) -> list[float]:
    """Every distinct best score plus the two infinite sentinels: the exact step curve."""
    g_max, _ = _best(gallery_scores)
    b_max, _ = _best(background_scores) if len(background_scores) else (np.empty(0), None)
    values = np.unique(np.concatenate([g_max, b_max]))
    return [-math.inf, *values.tolist(), math.inf]


def rr_fppi_curve(
    gallery_scores,
    gallery_labels: Sequence,
    identities: Sequence,
    background_scores,
    n_images: int,
    tau_grid: Optional[Sequence[float]] = None,
) -> list[CurvePoint]:
    """RR and FPPI at each threshold of an ascending grid (default: :func:`step_grid`)."""
    g_max, correct, b_max = _prepare(gallery_scores, gallery_labels, identities, background_scores)
    if len(g_max) == 0:
        raise ValueError("no gallery probes to evaluate")
    if n_images <= 0:
        raise ValueError("n_images must be positive")
    grid = step_grid(gallery_scores, background_scores) if tau_grid is None else list(tau_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("tau grid must be ascending")
    taus = np.asarray(grid, dtype=np.float64)

    # counts of values >= tau via sorted arrays
    sound_sorted = np.sort(g_max[correct])
    bg_sorted = np.sort(b_max)
    n_sound = len(sound_sorted) - np.searchsorted(sound_sorted, taus, side="left")
    n_fp = len(bg_sorted) - np.searchsorted(bg_sorted, taus, side="left")
    n_eval = len(g_max)
    return [
        CurvePoint(float(t), int(s) / n_eval, int(f) / n_images)
        for t, s, f in zip(taus, n_sound, n_fp)
    ]


def model_counts(model: GalleryModel, X_gallery, y_gallery, X_background, tau: float, n_images: int) -> OpenWorldCounts:
    """:func:`open_world_counts` from feature vectors scored by ``model``."""
    bg = score(model, X_background) if len(X_background) else np.empty((0, len(model.identities)))
    return open_world_counts(np.atleast_2d(score(model, X_gallery)), y_gallery, model.identities, bg, tau, n_images)


@dataclass(frozen=True)
class OpenWorldResult:
    train_fold: int
    identities: tuple
    gallery_ids: tuple[str, ...]
    gallery_labels: tuple[str, ...]
    gallery_scores: np.ndarray
    background_ids: tuple[str, ...]
    background_scores: np.ndarray
    n_images: int

    def curve(self, tau_grid=None) -> list[CurvePoint]:
        return rr_fppi_curve(self.gallery_scores, self.gallery_labels, self.identities,
                             self.background_scores, self.n_images, tau_grid)

    def counts(self, tau: float) -> OpenWorldCounts:
        return open_world_counts(self.gallery_scores, self.gallery_labels, self.identities,
                                 self.background_scores, tau, self.n_images)

    def closed_world_accuracy(self) -> float:
        pred = np.asarray(self.identities, dtype=object)[self.gallery_scores.argmax(axis=1)]
        return float(np.mean(pred == np.asarray(self.gallery_labels, dtype=object)))


def open_world_eval(
    corpus: Corpus,
    split: SplitAssignment,
    bank: FeatureBank,
    method: Method,
    train_fold: int = 0,
    estimator=None,
) -> OpenWorldResult:
    """Train on one fold's gallery, score the other fold's face-detected probes
    and every background detection.

    Only probes with a matched face detection are evaluated. Images are
    counted when they hold at least one evaluated probe or background
    detection. A fitted ``estimator`` (fused features in, SVM scores out)
    skips training.
    """
    if method.classifier != "svm":
        raise ValueError("open-world screening needs SVM scores")
    if estimator is None:
        train_ids = [i.instance_id for i in corpus
                     if i.identity is not None and split.assignment.get(i.instance_id) == train_fold]
        y_train = np.array([corpus.get(i).identity for i in train_ids]).astype(str)
        estimator = clone(method.make_estimator(bank)).fit(bank.matrix(method.all_cues, train_ids), y_train)
    identities = tuple(estimator.named_steps["clf"].classes_.tolist())
    gallery = set(identities)

    probes = [i for i in corpus
              if i.identity in gallery and i.matched_face is not None
              and split.assignment.get(i.instance_id) == 1 - train_fold]
    background = [i for i in corpus if i.is_background]
    photos = {i.photo_id for i in probes} | {i.photo_id for i in background}

    def scores(instances):
        if not instances:
            return np.empty((0, len(identities)))
        return estimator.decision_function(bank.matrix(method.all_cues, [i.instance_id for i in instances]))

    return OpenWorldResult(
        train_fold=train_fold,
        identities=identities,
        gallery_ids=tuple(i.instance_id for i in probes),
        gallery_labels=tuple(i.identity for i in probes),
        gallery_scores=scores(probes),
        background_ids=tuple(i.instance_id for i in background),
        background_scores=scores(background),
        n_images=len(photos),
    )
