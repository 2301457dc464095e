"""Region derivation, face/head matching and box regression.

Regions are never clipped to the photo here; pixel consumers clip at crop
time.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import (
    BBox,
    Corpus,
    FaceDetection,
    Instance,
    PhotoMeta,
    atomic_write_text,
    with_faces,
)

DEFAULT_IOU_THRESHOLD = 0.5


def intersection_area(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two half-open boxes."""
    if a == b:
        return 1.0
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class RegionSet:
    """The five cue regions of one instance: face, head, upper body, body, scene."""

    face: Optional[BBox]
    head: BBox
    upper: BBox
    body: BBox
    scene: BBox

    def as_dict(self) -> dict[str, Optional[BBox]]:
        return {"f": self.face, "h": self.head, "u": self.upper, "b": self.body, "s": self.scene}


@dataclass(frozen=True)
class BoxRegressor:
    """Scale-and-shift map from a source box to a target box.

    Offsets are expressed in units of the source width and height.
    """

    scale_w: float = 1.0
    scale_h: float = 1.0
    offset_x: float = 0.0
    offset_y: float = 0.0

    def __post_init__(self):
        if not (self.scale_w > 0 and self.scale_h > 0):
            raise ValueError("regressor scales must be positive")

    def apply(self, source: BBox) -> BBox:
        return apply_box_regressor(self, source)


IDENTITY_REGRESSOR = BoxRegressor()


def fit_box_regressor(pairs: Sequence[tuple[BBox, BBox]]) -> BoxRegressor:
    """Average per-pair scale and displacement over (source, target) box pairs."""
    if not pairs:
        raise ValueError("cannot fit a box regressor from an empty pair list")
    arr = np.array(
        [
            (t.w / s.w, t.h / s.h, (t.x - s.x) / s.w, (t.y - s.y) / s.h)
            for s, t in pairs
        ],
        dtype=np.float64,
    )
    sw, sh, ox, oy = arr.mean(axis=0)
    return BoxRegressor(float(sw), float(sh), float(ox), float(oy))


def apply_box_regressor(reg: BoxRegressor, source: BBox) -> BBox:
    return BBox(
        source.x + reg.offset_x * source.w,
        source.y + reg.offset_y * source.h,
        reg.scale_w * source.w,
        reg.scale_h * source.h,
    )


def derive_regions(
    head: BBox,
    photo: PhotoMeta,
    face: Optional[BBox] = None,
    face_regressor: Optional[BoxRegressor] = None,
) -> RegionSet:
    """Body is 3 head widths by 6 head heights with the head at its top centre.

    Without a detected face the face box is regressed from the head; when no
    regressor is given either, the face region is left empty.
    """
    body = BBox(head.x + head.w / 2 - 1.5 * head.w, head.y, 3 * head.w, 6 * head.h)
    upper = BBox(body.x, body.y, body.w, body.h / 2)
    scene = BBox(0.0, 0.0, photo.width, photo.height)
    if face is None and face_regressor is not None:
        face = face_regressor.apply(head)
    return RegionSet(face=face, head=head, upper=upper, body=body, scene=scene)


@dataclass
class MatchResult:
    """One-to-one face/head assignment.

    ``pairs`` holds ``(instance_id, face_index, iou)``; face indices refer to
    the detection list passed to the matcher.
    """

    pairs: list[tuple[str, int, float]] = field(default_factory=list)
    unmatched_heads: list[str] = field(default_factory=list)
    unmatched_faces: list[int] = field(default_factory=list)
    faces: list[FaceDetection] = field(default_factory=list)

    def face_of(self) -> dict[str, FaceDetection]:
        return {iid: self.faces[j] for iid, j, _ in self.pairs}

    def extend(self, other: "MatchResult") -> None:
        base = len(self.faces)
        self.faces.extend(other.faces)
        self.pairs.extend((iid, j + base, v) for iid, j, v in other.pairs)
        self.unmatched_heads.extend(other.unmatched_heads)
        self.unmatched_faces.extend(j + base for j in other.unmatched_faces)


def match_faces_to_heads(
    heads: Sequence[Instance],
    faces: Sequence[FaceDetection],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> MatchResult:
    """Greedy matching in descending detection score.

    Each face takes the still-unmatched head of highest IoU, provided the IoU
    reaches ``iou_threshold``. Ties (equal score, equal IoU) fall back to list
    order.
    """
    if not 0 < iou_threshold <= 1:
        raise ValueError("iou_threshold must lie in (0, 1]")
    faces = list(faces)
    order = sorted(range(len(faces)), key=lambda j: (-faces[j].score, j))
    free = list(range(len(heads)))
    result = MatchResult(faces=faces)
    matched_faces: set[int] = set()
    for j in order:
        best, best_iou = None, -1.0
        for i in free:
            v = iou(heads[i].head, faces[j].box)
            if v > best_iou:
                best, best_iou = i, v
        if best is not None and best_iou >= iou_threshold:
            free.remove(best)
            matched_faces.add(j)
            result.pairs.append((heads[best].instance_id, j, best_iou))
    result.pairs.sort(key=lambda p: p[1])
    result.unmatched_heads = [heads[i].instance_id for i in free]
    result.unmatched_faces = [j for j in range(len(faces)) if j not in matched_faces]
    return result


def match_corpus(
    corpus: Corpus,
    detections: Mapping[str, Sequence[FaceDetection]],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    score_threshold: Optional[float] = None,
) -> MatchResult:
    """Run the matcher photo by photo over annotated (non-background) heads.

    ``score_threshold`` drops weak detections before matching; there is no
    default cut.
    """
    heads_by_photo: dict[str, list[Instance]] = defaultdict(list)
    for inst in corpus:
        if not inst.is_background:
            heads_by_photo[inst.photo_id].append(inst)
    result = MatchResult()
    for photo_id in corpus.photos:
        faces = list(detections.get(photo_id, ()))
        if score_threshold is not None:
            faces = [f for f in faces if f.score >= score_threshold]
        result.extend(match_faces_to_heads(heads_by_photo.get(photo_id, []), faces, iou_threshold))
    return result


def assign_viewpoints(corpus: Corpus, matches: MatchResult) -> Corpus:
    """Attach matched faces; each instance's viewpoint then follows its face.

    f0 component gives FR, any other component NFR, no match NFD.
    """
    return with_faces(corpus, matches.face_of())


def background_instances(
    matches: MatchResult,
    photo_ids: Sequence[str],
    face_to_head: BoxRegressor,
    prefix: str = "bg",
) -> list[Instance]:
    """Turn unmatched detections into background instances with regressed heads.

    ``photo_ids[j]`` gives the photo of detection ``j``.
    """
    out = []
    for j in matches.unmatched_faces:
        face = matches.faces[j]
        out.append(
            Instance(
                instance_id=f"{prefix}{j}",
                photo_id=photo_ids[j],
                head=face_to_head.apply(face.box),
                identity=None,
                matched_face=face,
            )
        )
    return out


def fit_regressors(corpus: Corpus) -> tuple[BoxRegressor, BoxRegressor]:
    """Fit (head -> face, face -> head) regressors from the corpus's matched pairs."""
    pairs = [(inst.head, inst.matched_face.box) for inst in corpus
             if inst.matched_face is not None and not inst.is_background]
    if not pairs:
        return IDENTITY_REGRESSOR, IDENTITY_REGRESSOR
    return fit_box_regressor(pairs), fit_box_regressor([(f, h) for h, f in pairs])


def match_csv(matches: MatchResult, best_iou: Optional[Mapping[int, float]] = None) -> str:
    """Render matches as ``instance_id,face_index,iou,component``.

    Unmatched faces carry instance_id ``-`` and their best IoU against any
    head when ``best_iou`` is supplied, otherwise 0.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_id", "face_index", "iou", "component"])
    rows = [(iid, j, v) for iid, j, v in matches.pairs]
    rows += [("-", j, (best_iou or {}).get(j, 0.0)) for j in matches.unmatched_faces]
    for iid, j, v in sorted(rows, key=lambda r: r[1]):
        writer.writerow([iid, j, repr(float(v)), matches.faces[j].component.value])
    return buf.getvalue()


def write_match_csv(path, matches: MatchResult) -> None:
    atomic_write_text(path, match_csv(matches))
