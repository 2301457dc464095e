"""Photo corpora with head annotations, matched face detections and photo metadata.

Two line-oriented text files back a corpus::

    # annotations
    instance_id photo_id x y w h identity face_x face_y face_w face_h face_score face_component

    # photo metadata
    photo_id album_id taken_at width height

``-`` marks an absent value (background identity, missing face, missing
album or timestamp). Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import enum
import math
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional

MISSING = "-"


class CorpusFormatError(ValueError):
    """Raised when a corpus file violates the line grammar or an integrity rule."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)


class FaceComponent(str, enum.Enum):
    """Orientation of the detector component that fired."""

    M90 = "m90"
    M45 = "m45"
    F0 = "f0"
    P45 = "p45"
    P90 = "p90"

    @property
    def frontal(self) -> bool:
        return self is FaceComponent.F0


class Viewpoint(str, enum.Enum):
    FR = "FR"
    NFR = "NFR"
    NFD = "NFD"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, top-left origin, covering ``[x, x+w) x [y, y+h)``."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite box coordinate {name}")
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class PhotoMeta:
    photo_id: str
    album_id: Optional[str]
    taken_at: Optional[int]
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"photo {self.photo_id} must have positive size")


@dataclass(frozen=True)
class FaceDetection:
    box: BBox
    score: float
    component: FaceComponent


@dataclass(frozen=True)
class Instance:
    """One annotated person occurrence.

    ``identity is None`` marks a background person. The head box may extend
    past the photo borders since occluded heads were completed by annotators.
    """

    instance_id: str
    photo_id: str
    head: BBox
    identity: Optional[str] = None
    matched_face: Optional[FaceDetection] = None

    @property
    def viewpoint(self) -> Viewpoint:
        if self.matched_face is None:
            return Viewpoint.NFD
        return Viewpoint.FR if self.matched_face.component.frontal else Viewpoint.NFR

    @property
    def is_background(self) -> bool:
        return self.identity is None


@dataclass(frozen=True)
class Corpus:
    """Immutable set of photos and instances; instance order is file order."""

    photos: Mapping[str, PhotoMeta] = field(default_factory=dict)
    instances: tuple[Instance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "photos", dict(self.photos))
        object.__setattr__(self, "instances", tuple(self.instances))
        self._check()

    def _check(self) -> None:
        seen_ids: set[str] = set()
        seen_triples: set[tuple] = set()
        for lineno, inst in enumerate(self.instances, start=1):
            if inst.instance_id in seen_ids:
                raise CorpusFormatError(f"duplicate instance_id {inst.instance_id!r}", lineno)
            seen_ids.add(inst.instance_id)
            if inst.photo_id not in self.photos:
                raise CorpusFormatError("dangling photo reference", lineno)
            triple = (inst.photo_id, inst.head, inst.identity)
            if triple in seen_triples:
                raise CorpusFormatError("duplicate (photo, head box, identity) triple", lineno)
            seen_triples.add(triple)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    @property
    def index(self) -> dict[str, int]:
        """Map from instance_id to its position in iteration order."""
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {inst.instance_id: i for i, inst in enumerate(self.instances)}
            object.__setattr__(self, "_index", cached)
        return cached

    def get(self, instance_id: str) -> Instance:
        return self.instances[self.index[instance_id]]

    def photo_of(self, inst: Instance) -> PhotoMeta:
        return self.photos[inst.photo_id]

    def identities(self) -> list[str]:
        """Gallery identity labels, sorted lexicographically."""
        return sorted({inst.identity for inst in self.instances if inst.identity is not None})

    def with_instances(self, instances: Iterable[Instance]) -> "Corpus":
        return Corpus(self.photos, tuple(instances))


@dataclass(frozen=True)
class CorpusStats:
    n_instances: int
    n_identities: int
    n_photos: int
    n_albums: int
    n_background: int
    instances_per_identity: dict[str, int]

    def histogram(self) -> dict[int, int]:
        """Number of identities having each instance count."""
        return dict(sorted(Counter(self.instances_per_identity.values()).items()))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    per_identity = Counter(inst.identity for inst in corpus if inst.identity is not None)
    albums = {p.album_id for p in corpus.photos.values() if p.album_id is not None}
    return CorpusStats(
        n_instances=len(corpus),
        n_identities=len(per_identity),
        n_photos=len(corpus.photos),
        n_albums=len(albums),
        n_background=sum(1 for inst in corpus if inst.is_background),
        instances_per_identity=dict(sorted(per_identity.items())),
    )


# --- text I/O --------------------------------------------------------------


def _fmt_float(v: float) -> str:
    # repr round-trips exactly; integral values stay short
    return str(int(v)) if float(v).is_integer() and abs(v) < 2**53 else repr(float(v))


def _fmt_opt(v) -> str:
    return MISSING if v is None else str(v)


def _check_token(value: str, what: str) -> str:
    if not value or value == MISSING or any(c.isspace() for c in value):
        raise ValueError(f"invalid {what} token {value!r}")
    return value


def _data_lines(path: Path) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def _parse_float(tok: str, lineno: int, what: str) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise CorpusFormatError(f"cannot parse {what} {tok!r}", lineno) from None
    if not math.isfinite(value):
        raise CorpusFormatError(f"non-finite {what}", lineno)
    return value


def _parse_box(toks: list[str], lineno: int, what: str) -> BBox:
    x, y, w, h = (_parse_float(t, lineno, what) for t in toks)
    try:
        return BBox(x, y, w, h)
    except ValueError as exc:
        raise CorpusFormatError(f"invalid {what}: {exc}", lineno) from None


def _parse_photo(toks: list[str], lineno: int) -> PhotoMeta:
    if len(toks) != 5:
        raise CorpusFormatError(f"expected 5 photo columns, got {len(toks)}", lineno)
    photo_id, album, taken, width, height = toks
    taken_at = None
    if taken != MISSING:
        try:
            taken_at = int(taken)
        except ValueError:
            raise CorpusFormatError(f"cannot parse timestamp {taken!r}", lineno) from None
    try:
        return PhotoMeta(
            photo_id,
            None if album == MISSING else album,
            taken_at,
            _parse_float(width, lineno, "width"),
            _parse_float(height, lineno, "height"),
        )
    except ValueError as exc:
        raise CorpusFormatError(str(exc), lineno) from None


def _parse_instance(toks: list[str], lineno: int) -> Instance:
    if len(toks) != 13:
        raise CorpusFormatError(f"expected 13 annotation columns, got {len(toks)}", lineno)
    instance_id, photo_id = toks[0], toks[1]
    head = _parse_box(toks[2:6], lineno, "head box")
    identity = None if toks[6] == MISSING else toks[6]
    face_toks = toks[7:13]
    n_missing = sum(t == MISSING for t in face_toks)
    face = None
    if n_missing == 0:
        try:
            component = FaceComponent(face_toks[5].lower())
        except ValueError:
            raise CorpusFormatError(f"unknown face component {face_toks[5]!r}", lineno) from None
        face = FaceDetection(
            _parse_box(face_toks[:4], lineno, "face box"),
            _parse_float(face_toks[4], lineno, "face score"),
            component,
        )
    elif n_missing != 6:
        raise CorpusFormatError("face columns must be all present or all '-'", lineno)
    return Instance(instance_id, photo_id, head, identity, face)


def load_corpus(annotation_path, photo_meta_path) -> Corpus:
    """Parse an annotation file and a photo-metadata file into a :class:`Corpus`."""
    photos: dict[str, PhotoMeta] = {}
    for lineno, toks in _data_lines(Path(photo_meta_path)):
        photo = _parse_photo(toks, lineno)
        if photo.photo_id in photos:
            raise CorpusFormatError(f"duplicate photo_id {photo.photo_id!r}", lineno)
        photos[photo.photo_id] = photo

    instances: list[Instance] = []
    seen: set[str] = set()
    triples: set[tuple] = set()
    for lineno, toks in _data_lines(Path(annotation_path)):
        inst = _parse_instance(toks, lineno)
        if inst.instance_id in seen:
            raise CorpusFormatError(f"duplicate instance_id {inst.instance_id!r}", lineno)
        if inst.photo_id not in photos:
            raise CorpusFormatError("dangling photo reference", lineno)
        triple = (inst.photo_id, inst.head, inst.identity)
        if triple in triples:
            raise CorpusFormatError("duplicate (photo, head box, identity) triple", lineno)
        seen.add(inst.instance_id)
        triples.add(triple)
        instances.append(inst)
    return Corpus(photos, tuple(instances))


def format_instance(inst: Instance) -> str:
    cols = [
        _check_token(inst.instance_id, "instance_id"),
        _check_token(inst.photo_id, "photo_id"),
        *(_fmt_float(v) for v in (inst.head.x, inst.head.y, inst.head.w, inst.head.h)),
        MISSING if inst.identity is None else _check_token(inst.identity, "identity"),
    ]
    face = inst.matched_face
    if face is None:
        cols += [MISSING] * 6
    else:
        b = face.box
        cols += [_fmt_float(v) for v in (b.x, b.y, b.w, b.h, face.score)]
        cols.append(face.component.value)
    return " ".join(cols)


def format_photo(photo: PhotoMeta) -> str:
    album = MISSING if photo.album_id is None else _check_token(photo.album_id, "album_id")
    return " ".join(
        [
            _check_token(photo.photo_id, "photo_id"),
            album,
            _fmt_opt(photo.taken_at),
            _fmt_float(photo.width),
            _fmt_float(photo.height),
        ]
    )


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_corpus(corpus: Corpus, annotation_path, photo_meta_path) -> None:
    ann = ["# instance_id photo_id x y w h identity face_x face_y face_w face_h face_score face_component"]
    ann += [format_instance(inst) for inst in corpus]
    meta = ["# photo_id album_id taken_at width height"]
    meta += [format_photo(p) for p in corpus.photos.values()]
    atomic_write_text(photo_meta_path, "\n".join(meta) + "\n")
    atomic_write_text(annotation_path, "\n".join(ann) + "\n")


def with_faces(corpus: Corpus, faces: Mapping[str, Optional[FaceDetection]]) -> Corpus:
    """Return a copy of ``corpus`` whose instances carry the given matched faces."""
    return corpus.with_instances(
        replace(inst, matched_face=faces.get(inst.instance_id)) for inst in corpus
    )
