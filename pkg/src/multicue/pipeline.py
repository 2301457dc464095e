"""Methods (cue stack + fusion + classifier) and per-corpus feature banks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.pipeline import Pipeline

from .classify import ChanceClassifier, NearestNeighborClassifier, OneVsRestLinearSVC
from .corpus import Corpus
from .features.cache import EmbeddingTable
from .features.fusion import CueFusion, CueStack, FusionMode
from .features.providers import CueProvider, embed_corpus

CLASSIFIERS = ("svm", "nn", "chance")


@dataclass(frozen=True)
class Method:
    """A recognition method: which cues, how they are fused, which classifier.

    In ``weighted`` mode ``cues`` form the base group and ``extra_cue`` is
    appended with weight ``lam``.
    """

    name: str
    cues: tuple[str, ...]
    mode: FusionMode = FusionMode.L2CONCAT
    lam: float = 1.0
    extra_cue: Optional[str] = None
    base_mode: FusionMode = FusionMode.CONCAT
    classifier: str = "svm"
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cues", tuple(self.cues))
        object.__setattr__(self, "mode", FusionMode(self.mode))
        object.__setattr__(self, "base_mode", FusionMode(self.base_mode))
        if not self.cues:
            raise ValueError(f"method {self.name!r} has no cues")
        if self.mode is FusionMode.WEIGHTED and self.extra_cue is None:
            raise ValueError(f"weighted method {self.name!r} needs an extra cue")
        if self.mode is not FusionMode.WEIGHTED and self.extra_cue is not None:
            raise ValueError(f"extra cue given for non-weighted method {self.name!r}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def all_cues(self) -> tuple[str, ...]:
        return self.cues + ((self.extra_cue,) if self.extra_cue else ())

    def with_lambda(self, lam: float) -> "Method":
        return replace(self, lam=float(lam))

    def stack(self, bank: "FeatureBank") -> CueStack:
        return CueStack(self.name, tuple((c, bank.dim(c)) for c in self.all_cues))

    def make_estimator(self, bank: "FeatureBank") -> Pipeline:
        if self.classifier == "svm":
            clf = OneVsRestLinearSVC(C=self.C, tol=self.tol, max_iter=self.max_iter, random_state=self.seed)
        elif self.classifier == "nn":
            clf = NearestNeighborClassifier()
        else:
            clf = ChanceClassifier()
        fusion = CueFusion(
            block_sizes=tuple(self.stack(bank).dims),
            mode=self.mode.value,
            lam=self.lam,
            base_mode=self.base_mode.value,
        )
        return Pipeline([("fuse", fusion), ("clf", clf)])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cues": list(self.cues),
            "mode": self.mode.value,
            "lam": self.lam,
            "extra_cue": self.extra_cue,
            "base_mode": self.base_mode.value,
            "classifier": self.classifier,
            "C": self.C,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "seed": self.seed,
        }


@dataclass
class FeatureBank:
    """Per-cue matrices aligned with a corpus's instance order."""

    instance_ids: list[str]
    cues: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self._index = {iid: i for i, iid in enumerate(self.instance_ids)}
        for name, values in self.cues.items():
            self._check(name, values)

    def _check(self, name, values):
        if values.ndim != 2 or values.shape[0] != len(self.instance_ids):
            raise ValueError(f"cue {name!r} has shape {values.shape}, expected ({len(self.instance_ids)}, d)")

    def add(self, name: str, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float32)
        self._check(name, values)
        self.cues[name] = values

    def dim(self, cue: str) -> int:
        try:
            return self.cues[cue].shape[1]
        except KeyError:
            raise KeyError(f"no features for cue {cue!r}") from None

    def rows(self, instance_ids: Sequence[str]) -> np.ndarray:
        return np.array([self._index[iid] for iid in instance_ids], dtype=np.int64)

    def matrix(self, cues: Sequence[str], instance_ids: Optional[Sequence[str]] = None) -> np.ndarray:
        """Raw cue blocks side by side, as float64."""
        for c in cues:
            self.dim(c)
        idx = slice(None) if instance_ids is None else self.rows(instance_ids)
        return np.hstack([self.cues[c][idx].astype(np.float64) for c in cues])

    @classmethod
    def from_provider(cls, provider: CueProvider, corpus: Corpus, cues: Sequence[str]) -> "FeatureBank":
        bank = cls([inst.instance_id for inst in corpus])
        for cue in cues:
            bank.add(cue, embed_corpus(provider, corpus, cue))
        return bank

    @classmethod
    def from_tables(cls, corpus: Corpus, tables: Mapping[str, EmbeddingTable]) -> "FeatureBank":
        ids = [inst.instance_id for inst in corpus]
        bank = cls(ids)
        for name, table in tables.items():
            bank.add(name, table.rows(ids))
        return bank

    def table(self, cue: str) -> EmbeddingTable:
        return EmbeddingTable(cue, list(self.instance_ids), self.cues[cue])
