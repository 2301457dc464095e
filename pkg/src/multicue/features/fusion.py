"""Cue fusion: plain concatenation, per-cue L2-normalised concatenation, and the
lambda-weighted two-group combination, plus the lambda search.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

LAMBDA_STEP = 0.05
LAMBDA_MAX = 3.0


class FusionMode(str, enum.Enum):
    CONCAT = "concat"
    L2CONCAT = "l2concat"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class FusionConfig:
    mode: FusionMode = FusionMode.L2CONCAT
    lam: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", FusionMode(self.mode))
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")


@dataclass(frozen=True)
class CueStack:
    """Ordered cue names with their dimensions, forming one method."""

    method_name: str
    cues: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.cues]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate cue names in {self.method_name}: {names}")
        object.__setattr__(self, "cues", tuple((str(n), int(d)) for n, d in self.cues))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.cues]

    @property
    def dims(self) -> list[int]:
        return [d for _, d in self.cues]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)


def l2_normalize(v) -> np.ndarray:
    """Divide by the L2 norm along the last axis; exact-zero vectors pass through."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(norm == 0.0, 1.0, norm)


def fuse(vectors: Sequence, config: FusionConfig = FusionConfig(), stack: Optional[CueStack] = None):
    """Fuse per-cue vectors (or per-cue row matrices) into one feature vector.

    WEIGHTED takes exactly two groups ``(base, extra)`` and returns
    ``[base/|base|, lam * extra/|extra|]``.
    """
    if len(vectors) == 0:
        raise ValueError("nothing to fuse")
    parts = [np.asarray(v, dtype=np.float64) for v in vectors]
    if stack is not None:
        if [p.shape[-1] for p in parts] != stack.dims:
            raise ValueError(
                f"dimension mismatch: got {[p.shape[-1] for p in parts]}, "
                f"{stack.method_name} declares {stack.dims}"
            )
    if config.mode is FusionMode.CONCAT:
        return np.concatenate(parts, axis=-1)
    if config.mode is FusionMode.L2CONCAT:
        return np.concatenate([l2_normalize(p) for p in parts], axis=-1)
    if len(parts) != 2:
        raise ValueError("weighted fusion needs exactly two groups (base, extra)")
    base, extra = parts
    return np.concatenate([l2_normalize(base), config.lam * l2_normalize(extra)], axis=-1)


class CueFusion(TransformerMixin, BaseEstimator):
    """Fuse the column blocks of a raw cue matrix.

    ``block_sizes`` gives the width of each cue block in column order. In
    ``"weighted"`` mode the last block is the extra cue and all earlier
    blocks form the base group, which is first fused with ``base_mode``.

    Stateless: ``fit`` only checks that the blocks cover the input.
    """

    def __init__(self, block_sizes=None, mode="l2concat", lam=1.0, base_mode="concat"):
        self.block_sizes = block_sizes
        self.mode = mode
        self.lam = lam
        self.base_mode = base_mode

    def _blocks(self, X):
        sizes = list(self.block_sizes) if self.block_sizes is not None else [X.shape[1]]
        if sum(sizes) != X.shape[1]:
            raise ValueError(f"block sizes {sizes} do not cover {X.shape[1]} columns")
        return np.split(X, np.cumsum(sizes)[:-1], axis=1)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self._blocks(X)
        FusionConfig(self.mode, self.lam)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        blocks = self._blocks(X)
        config = FusionConfig(self.mode, self.lam)
        if config.mode is not FusionMode.WEIGHTED:
            return fuse(blocks, config)
        if len(blocks) < 2:
            raise ValueError("weighted fusion needs a base group and an extra cue")
        base = fuse(blocks[:-1], FusionConfig(self.base_mode))
        return fuse([base, blocks[-1]], config)


def lambda_grid() -> list[float]:
    """The 61 equally spaced weights 0, 0.05, ..., 3."""
    n = int(round(LAMBDA_MAX / LAMBDA_STEP))
    return [i / 20 for i in range(n + 1)]


def sweep(eval_fn: Callable[[float], float], grid: Sequence[float]) -> list[tuple[float, float]]:
    return [(float(lam), float(eval_fn(lam))) for lam in grid]


def best_lambda(curve: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Argmax of accuracy; ties go to the smaller lambda."""
    if not curve:
        raise ValueError("empty lambda grid")
    lam, acc = min(curve, key=lambda p: (-p[1], p[0]))
    return lam, acc


def optimize_lambda(eval_fn: Callable[[float], float], grid: Optional[Sequence[float]] = None):
    return best_lambda(sweep(eval_fn, lambda_grid() if grid is None else grid))
