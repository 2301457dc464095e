"""Synthetic corpora for tests, demos and the acceptance runs.

Every identity gets its instances spread over albums and day groups, each
instance in its own photo. Viewpoints are drawn to match a requested
FR/NFR/NFD mix: FR instances carry a frontal face detection, NFR ones a
profile or three-quarter detection, NFD ones none. Background people are
added as extra face-detected heads without an identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeding import derived_rng
from .corpus import BBox, Corpus, FaceComponent, FaceDetection, Instance, PhotoMeta, Viewpoint
from .features.providers import SyntheticEmbedderConfig

# FR / NFR / NFD shares of the annotated heads in the reference photo collection
DEFAULT_VIEWPOINT_MIX = (0.4129, 0.2710, 0.3160)
VIEWPOINTS = (Viewpoint.FR, Viewpoint.NFR, Viewpoint.NFD)
NONFRONTAL = (FaceComponent.M90, FaceComponent.M45, FaceComponent.P45, FaceComponent.P90)

PHOTO_W, PHOTO_H = 1280.0, 960.0
DAY_SECONDS = 86_400


def _normalized_mix(mix) -> tuple[float, float, float]:
    mix = tuple(float(p) for p in mix)
    if len(mix) != 3 or any(p < 0 for p in mix) or sum(mix) <= 0:
        raise ValueError("viewpoint mix needs three non-negative proportions")
    total = sum(mix)
    return tuple(p / total for p in mix)


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_identities: int = 50
    instances_per_identity: int = 20
    albums_per_identity: int = 2
    day_groups_per_identity: int = 2
    viewpoint_mix: tuple[float, float, float] = DEFAULT_VIEWPOINT_MIX
    n_background: int = 0
    embedder: SyntheticEmbedderConfig = field(default_factory=SyntheticEmbedderConfig)
    seed: int = 0
    missing_timestamp_rate: float = 0.0
    # when set, overrides instances_per_identity: spread as evenly as possible
    total_instances: Optional[int] = None

    def __post_init__(self):
        for name in ("n_identities", "instances_per_identity", "albums_per_identity", "day_groups_per_identity"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_background < 0:
            raise ValueError("n_background must be non-negative")
        if self.total_instances is not None and self.total_instances < self.n_identities:
            raise ValueError("total_instances must give every identity at least one instance")
        if not 0.0 <= self.missing_timestamp_rate <= 1.0:
            raise ValueError("missing_timestamp_rate outside [0, 1]")
        mix = tuple(float(p) for p in self.viewpoint_mix)
        # the published shares are rounded and sum to 0.9999
        if len(mix) != 3 or abs(sum(mix) - 1.0) > 1e-3:
            raise ValueError("viewpoint proportions must sum to 1")
        object.__setattr__(self, "viewpoint_mix", _normalized_mix(mix))

    @property
    def per_identity_counts(self) -> list[int]:
        if self.total_instances is None:
            return [self.instances_per_identity] * self.n_identities
        q, r = divmod(self.total_instances, self.n_identities)
        return [q + 1 if p < r else q for p in range(self.n_identities)]

    @property
    def n_instances(self) -> int:
        return sum(self.per_identity_counts)

    def to_dict(self) -> dict:
        return {
            "n_identities": self.n_identities,
            "instances_per_identity": self.instances_per_identity,
            "albums_per_identity": self.albums_per_identity,
            "day_groups_per_identity": self.day_groups_per_identity,
            "viewpoint_mix": list(self.viewpoint_mix),
            "n_background": self.n_background,
            "embedder": self.embedder.to_dict(),
            "seed": self.seed,
            "missing_timestamp_rate": self.missing_timestamp_rate,
            "total_instances": self.total_instances,
        }


def viewpoint_quotas(n: int, mix) -> list[int]:
    """Largest-remainder apportionment of ``n`` over ``mix``; ties go to the earlier class."""
    mix = _normalized_mix(mix)
    raw = [n * p for p in mix]
    counts = [int(np.floor(r)) for r in raw]
    order = sorted(range(len(mix)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


@dataclass(frozen=True)
class SyntheticCorpus:
    corpus: Corpus
    day_labels: dict[str, str]
    spec: SyntheticCorpusSpec


def _head_box(rng: np.random.Generator) -> BBox:
    h = float(np.round(np.exp(rng.uniform(np.log(30.0), np.log(300.0))), 1))
    w = float(np.round(0.8 * h, 1))
    x = float(np.round(rng.uniform(0, PHOTO_W - w), 1))
    y = float(np.round(rng.uniform(0, PHOTO_H / 3), 1))
    return BBox(x, y, w, h)


def _face_for(head: BBox, viewpoint: Viewpoint, rng: np.random.Generator) -> Optional[FaceDetection]:
    if viewpoint is Viewpoint.NFD:
        return None
    component = FaceComponent.F0 if viewpoint is Viewpoint.FR else NONFRONTAL[int(rng.integers(len(NONFRONTAL)))]
    # a face box covering the central 80% of the head, so IoU with it is 0.64
    box = BBox(
        float(np.round(head.x + 0.1 * head.w, 2)),
        float(np.round(head.y + 0.1 * head.h, 2)),
        float(np.round(0.8 * head.w, 2)),
        float(np.round(0.8 * head.h, 2)),
    )
    score = float(np.round(rng.uniform(0.5, 1.0), 4))
    return FaceDetection(box, score, component)


def generate_corpus(spec: SyntheticCorpusSpec) -> SyntheticCorpus:
    """Deterministic corpus, photo metadata and day labels for ``spec``."""
    rng = derived_rng(spec.seed, "corpus")
    n = spec.n_instances
    quotas = viewpoint_quotas(n, spec.viewpoint_mix)
    viewpoints = np.repeat(np.arange(3), quotas)
    rng.shuffle(viewpoints)

    width = max(3, len(str(spec.n_identities - 1)))
    photos: dict[str, PhotoMeta] = {}
    instances: list[Instance] = []
    day_labels: dict[str, str] = {}
    k = 0
    for p, n_p in enumerate(spec.per_identity_counts):
        identity = f"id{p:0{width}d}"
        prng = derived_rng(spec.seed, "identity", identity)
        n_days = spec.day_groups_per_identity
        # every day group gets at least one instance when there are enough
        days = np.arange(n_p) % n_days
        prng.shuffle(days)
        day_start = np.sort(prng.choice(3650, size=n_days, replace=False)) * DAY_SECONDS
        for j in range(n_p):
            iid = f"{identity}_{j:03d}"
            photo_id = f"p{identity}_{j:03d}"
            day = int(days[j])
            album = f"{identity}_a{day % spec.albums_per_identity}"
            taken: Optional[int] = int(day_start[day] + prng.integers(8 * 3600, 20 * 3600))
            if prng.random() < spec.missing_timestamp_rate:
                taken = None
            photos[photo_id] = PhotoMeta(photo_id, album, taken, PHOTO_W, PHOTO_H)
            head = _head_box(prng)
            vp = VIEWPOINTS[int(viewpoints[k])]
            instances.append(Instance(iid, photo_id, head, identity, _face_for(head, vp, prng)))
            day_labels[iid] = f"{identity}_d{day}"
            k += 1

    brng = derived_rng(spec.seed, "background")
    photo_ids = list(photos)
    for b in range(spec.n_background):
        photo_id = photo_ids[int(brng.integers(len(photo_ids)))]
        head = _head_box(brng)
        # background people are face detections by construction
        fr_share = spec.viewpoint_mix[0] / max(spec.viewpoint_mix[0] + spec.viewpoint_mix[1], 1e-12)
        vp = Viewpoint.FR if brng.random() < fr_share else Viewpoint.NFR
        instances.append(Instance(f"bg{b:05d}", photo_id, head, None, _face_for(head, vp, brng)))

    return SyntheticCorpus(Corpus(photos, tuple(instances)), day_labels, spec)
