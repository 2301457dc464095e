"""Cue providers.

A provider turns ``(corpus, instance, cue)`` into a fixed-width vector. The
real system would run a convnet per region; here the contract is what
matters, and :class:`SyntheticEmbedder` is a controllable stand-in with
identity prototypes, per-viewpoint attenuation and optional day-specific
appearance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol

import numpy as np

from .._seeding import derived_rng
from ..corpus import Corpus, Instance, Viewpoint

REGION_KINDS = ("f", "h", "u", "b", "s")


class UnsupportedRegion(ValueError):
    pass


def region_of(cue_name: str) -> str:
    """Cue names are ``<region>`` or ``<region>_<variant>``, e.g. ``h`` or ``h_rgb``."""
    region = cue_name.split("_", 1)[0]
    if region not in REGION_KINDS:
        raise UnsupportedRegion(f"cue {cue_name!r} names unknown region {region!r}")
    return region


class CueProvider(Protocol):
    def supports(self, cue_name: str) -> bool: ...

    def dim(self, cue_name: str) -> int: ...

    def embed(self, corpus: Corpus, instance: Instance, cue_name: str) -> np.ndarray: ...


@dataclass(frozen=True)
class CueVector:
    cue_name: str
    values: np.ndarray


def embed(provider: CueProvider, corpus: Corpus, instance: Instance, cue_name: str) -> CueVector:
    if not provider.supports(cue_name):
        raise UnsupportedRegion(f"{type(provider).__name__} does not support cue {cue_name!r}")
    values = np.asarray(provider.embed(corpus, instance, cue_name), dtype=np.float32)
    if values.shape != (provider.dim(cue_name),):
        raise ValueError(f"provider returned shape {values.shape} for cue {cue_name!r}")
    if not np.isfinite(values).all():
        raise ValueError(f"non-finite embedding for {instance.instance_id}/{cue_name}")
    return CueVector(cue_name, values)


def embed_corpus(provider: CueProvider, corpus: Corpus, cue_name: str, instances=None) -> np.ndarray:
    """Stack one cue over ``instances`` (default: the whole corpus, file order)."""
    instances = corpus.instances if instances is None else instances
    out = np.empty((len(instances), provider.dim(cue_name)), dtype=np.float32)
    for i, inst in enumerate(instances):
        out[i] = embed(provider, corpus, inst, cue_name).values
    return out


@dataclass(frozen=True)
class SyntheticEmbedderConfig:
    """Knobs of the synthetic cue generator.

    ``viewpoint_attenuation[cue][viewpoint]`` scales the identity signal
    (missing entries mean 1). ``day_specificity[cue]`` in [0, 1] is the share
    of the prototype energy tied to the instance's day group rather than to
    the identity alone: clothing and events change between days, faces do
    not. With ``face_cue_missing_on_nfd`` face-region cues are all zeros on
    NFD instances, like a face recogniser that fails without a visible face.
    """

    seed: int = 0
    dim: int = 32
    identity_signal: float = 1.0
    noise_sigma: float = 0.3
    viewpoint_attenuation: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    day_specificity: Mapping[str, float] = field(default_factory=dict)
    face_cue_missing_on_nfd: bool = False

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.identity_signal < 0 or self.noise_sigma < 0:
            raise ValueError("identity_signal and noise_sigma must be non-negative")
        for cue, table in self.viewpoint_attenuation.items():
            for vp, factor in table.items():
                Viewpoint(vp)
                if not 0.0 <= factor <= 1.0:
                    raise ValueError(f"attenuation for {cue}/{vp} outside [0, 1]")
        for cue, rho in self.day_specificity.items():
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"day specificity for {cue} outside [0, 1]")

    def attenuation(self, cue_name: str, viewpoint: Viewpoint) -> float:
        return float(self.viewpoint_attenuation.get(cue_name, {}).get(Viewpoint(viewpoint).value, 1.0))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dim": self.dim,
            "identity_signal": self.identity_signal,
            "noise_sigma": self.noise_sigma,
            "viewpoint_attenuation": {k: dict(v) for k, v in sorted(self.viewpoint_attenuation.items())},
            "day_specificity": dict(sorted(self.day_specificity.items())),
            "face_cue_missing_on_nfd": self.face_cue_missing_on_nfd,
        }


def _unit_gaussian(dim: int, *key) -> np.ndarray:
    # components ~ N(0, 1/dim), so the expected squared norm is 1
    return derived_rng(*key).standard_normal(dim) / np.sqrt(dim)


def synthetic_embed(
    config: SyntheticEmbedderConfig,
    instance: Instance,
    cue_name: str,
    viewpoint: Optional[Viewpoint] = None,
    day: Optional[str] = None,
) -> np.ndarray:
    """``signal * attenuation * prototype + noise_sigma * noise``, as float32.

    Prototypes are keyed by (seed, identity, cue) and, for the day-specific
    share, by the day group too; noise is keyed by (seed, instance, cue).
    Background instances get noise only.
    """
    viewpoint = instance.viewpoint if viewpoint is None else Viewpoint(viewpoint)
    if (
        config.face_cue_missing_on_nfd
        and viewpoint is Viewpoint.NFD
        and region_of(cue_name) == "f"
    ):
        return np.zeros(config.dim, dtype=np.float32)

    vec = config.noise_sigma * _unit_gaussian(config.dim, config.seed, "noise", instance.instance_id, cue_name)
    if instance.identity is not None and config.identity_signal > 0:
        rho = config.day_specificity.get(cue_name, 0.0) if day is not None else 0.0
        proto = np.sqrt(1.0 - rho) * _unit_gaussian(config.dim, config.seed, "proto", instance.identity, cue_name)
        if rho > 0:
            proto += np.sqrt(rho) * _unit_gaussian(
                config.dim, config.seed, "day", instance.identity, day, cue_name
            )
        vec += config.identity_signal * config.attenuation(cue_name, viewpoint) * proto
    return vec.astype(np.float32)


class SyntheticEmbedder:
    """Provider backed by :func:`synthetic_embed`; supports every region."""

    def __init__(self, config: SyntheticEmbedderConfig, day_labels: Optional[Mapping[str, str]] = None):
        self.config = config
        self.day_labels = dict(day_labels or {})

    def supports(self, cue_name: str) -> bool:
        try:
            region_of(cue_name)
        except UnsupportedRegion:
            return False
        return True

    def dim(self, cue_name: str) -> int:
        return self.config.dim

    def embed(self, corpus: Corpus, instance: Instance, cue_name: str) -> np.ndarray:
        return synthetic_embed(
            self.config, instance, cue_name, day=self.day_labels.get(instance.instance_id)
        )
