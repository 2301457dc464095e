"""Per-identity two-fold partitions: Original, Album, Time and Day.

Each generator assigns every gallery instance to fold 0 or 1, or discards
it. All randomness is keyed by ``(seed, split kind, identity)`` so results
do not depend on the order identities are processed in.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from ._seeding import derived_rng
from .corpus import Corpus, CorpusFormatError, Instance, atomic_write_text

DAY_MIN_FOLD = 5
EXHAUSTIVE_MAX_GROUPS = 15


class SplitKind(str, enum.Enum):
    ORIGINAL = "original"
    ALBUM = "album"
    TIME = "time"
    DAY = "day"


@dataclass
class SplitAssignment:
    kind: SplitKind
    assignment: dict[str, int] = field(default_factory=dict)
    discarded: set[str] = field(default_factory=set)
    # (identity, album key) pairs allowed to straddle the folds
    shared_albums: set[tuple[str, str]] = field(default_factory=set)

    def fold_of(self, instance_id: str) -> Optional[int]:
        return self.assignment.get(instance_id)

    def fold_ids(self, fold: int) -> list[str]:
        return [iid for iid, f in self.assignment.items() if f == fold]


def _by_identity(corpus: Corpus) -> dict[str, list[Instance]]:
    groups: dict[str, list[Instance]] = defaultdict(list)
    for inst in corpus:
        if inst.identity is not None:
            groups[inst.identity].append(inst)
    return dict(groups)


def _discard_small(identity: str, members: list[Instance], out: SplitAssignment, minimum: int = 2) -> bool:
    if len(members) >= minimum:
        return False
    warnings.warn(f"identity {identity!r} has {len(members)} instance(s); discarded", stacklevel=3)
    out.discarded.update(m.instance_id for m in members)
    return True


def _ordered(corpus: Corpus, out: SplitAssignment) -> SplitAssignment:
    # keep the assignment map in corpus order for stable files
    out.assignment = {inst.instance_id: out.assignment[inst.instance_id]
                      for inst in corpus if inst.instance_id in out.assignment}
    return out


def split_original(corpus: Corpus, seed: int = 0) -> SplitAssignment:
    """Random halves per identity; the odd instance goes to fold 0."""
    out = SplitAssignment(SplitKind.ORIGINAL)
    for identity, members in _by_identity(corpus).items():
        if _discard_small(identity, members, out):
            continue
        perm = derived_rng(seed, "original", identity).permutation(len(members))
        n0 = (len(members) + 1) // 2
        for rank, j in enumerate(perm):
            out.assignment[members[j].instance_id] = 0 if rank < n0 else 1
    return _ordered(corpus, out)


def album_key(corpus: Corpus, inst: Instance) -> str:
    """Album of the instance's photo; instances without one form singleton pseudo-albums."""
    album = corpus.photo_of(inst).album_id
    return album if album is not None else f"~{inst.instance_id}"


def split_album(corpus: Corpus, seed: int = 0) -> SplitAssignment:
    """Whole albums go to the currently smaller fold, largest albums first.

    If the folds still differ by more than one instance, the largest album on
    the heavier side is marked shared and some of its instances (chosen at
    random) move across until the difference is at most one.
    """
    out = SplitAssignment(SplitKind.ALBUM)
    for identity, members in _by_identity(corpus).items():
        if _discard_small(identity, members, out):
            continue
        rng = derived_rng(seed, "album", identity)
        albums: dict[str, list[Instance]] = defaultdict(list)
        for inst in members:
            albums[album_key(corpus, inst)].append(inst)
        keys = list(albums)
        tiebreak = dict(zip(keys, rng.permutation(len(keys))))
        keys.sort(key=lambda k: (-len(albums[k]), tiebreak[k]))

        sizes = [0, 0]
        side_of: dict[str, int] = {}
        for k in keys:
            side = 0 if sizes[0] <= sizes[1] else 1
            side_of[k] = side
            sizes[side] += len(albums[k])
        for k in keys:
            for inst in albums[k]:
                out.assignment[inst.instance_id] = side_of[k]

        if abs(sizes[0] - sizes[1]) > 1:
            heavy = 0 if sizes[0] > sizes[1] else 1
            shared = next(k for k in keys if side_of[k] == heavy)
            out.shared_albums.add((identity, shared))
            n_move = abs(sizes[0] - sizes[1]) // 2
            movers = rng.permutation(len(albums[shared]))[:n_move]
            for j in movers:
                out.assignment[albums[shared][j].instance_id] = 1 - heavy
    return _ordered(corpus, out)


def split_time(corpus: Corpus) -> SplitAssignment:
    """Oldest half to fold 0, newest half to fold 1.

    Equal timestamps order by instance_id. Instances without a timestamp
    alternate between folds in file order, starting with the smaller fold.
    """
    out = SplitAssignment(SplitKind.TIME)
    for identity, members in _by_identity(corpus).items():
        if _discard_small(identity, members, out):
            continue
        dated = [m for m in members if corpus.photo_of(m).taken_at is not None]
        undated = [m for m in members if corpus.photo_of(m).taken_at is None]
        dated.sort(key=lambda m: (corpus.photo_of(m).taken_at, m.instance_id))
        n0 = (len(dated) + 1) // 2
        sizes = [n0, len(dated) - n0]
        for rank, m in enumerate(dated):
            out.assignment[m.instance_id] = 0 if rank < n0 else 1
        side = 0 if sizes[0] <= sizes[1] else 1
        for m in undated:
            out.assignment[m.instance_id] = side
            side = 1 - side
    return _ordered(corpus, out)


def _bipartition(sizes: list[int]) -> list[int]:
    """Fold per group minimising the size difference, first group in fold 0."""
    g = len(sizes)
    if g <= EXHAUSTIVE_MAX_GROUPS:
        best_diff, best_mask = None, None
        total = sum(sizes)
        for mask in range(1, 1 << (g - 1)):
            ones = sum(sizes[i + 1] for i in range(g - 1) if mask >> i & 1)
            diff = abs(total - 2 * ones)
            if best_diff is None or diff < best_diff:
                best_diff, best_mask = diff, mask
        return [0] + [best_mask >> i & 1 for i in range(g - 1)]
    order = sorted(range(g), key=lambda i: (-sizes[i], i))
    folds, totals = [0] * g, [0, 0]
    for i in order:
        side = 0 if totals[0] <= totals[1] else 1
        folds[i] = side
        totals[side] += sizes[i]
    if folds[0] == 1:
        folds = [1 - f for f in folds]
    return folds


def split_day(corpus: Corpus, labels: Mapping[str, str], seed: int = 0) -> SplitAssignment:
    """Split by day group, then equalise fold sizes by random discards.

    Identities without labels, with a single day group, or whose smaller fold
    has at most 4 instances are discarded entirely.
    """
    out = SplitAssignment(SplitKind.DAY)
    for identity, members in _by_identity(corpus).items():
        covered = [m.instance_id in labels for m in members]
        if not any(covered):
            warnings.warn(f"identity {identity!r} has no day labels; discarded", stacklevel=2)
            out.discarded.update(m.instance_id for m in members)
            continue
        if not all(covered):
            raise ValueError(f"day labels cover only part of identity {identity!r}")

        groups: dict[str, list[Instance]] = defaultdict(list)
        for m in members:
            groups[labels[m.instance_id]].append(m)
        if len(groups) < 2:
            warnings.warn(f"identity {identity!r} has a single day group; discarded", stacklevel=2)
            out.discarded.update(m.instance_id for m in members)
            continue

        tags = list(groups)
        folds = _bipartition([len(groups[t]) for t in tags])
        sides: list[list[Instance]] = [[], []]
        for tag, f in zip(tags, folds):
            sides[f].extend(groups[tag])
        # keep each side in file order before sampling
        for side in sides:
            side.sort(key=lambda m: corpus.index[m.instance_id])
        keep = min(len(sides[0]), len(sides[1]))
        if keep < DAY_MIN_FOLD:
            out.discarded.update(m.instance_id for m in members)
            continue
        rng = derived_rng(seed, "day", identity)
        for f, side in enumerate(sides):
            kept = set(rng.permutation(len(side))[:keep].tolist()) if len(side) > keep else range(len(side))
            for j, m in enumerate(side):
                if j in kept:
                    out.assignment[m.instance_id] = f
                else:
                    out.discarded.add(m.instance_id)
    return _ordered(corpus, out)


def make_split(kind, corpus: Corpus, seed: int = 0, labels: Optional[Mapping[str, str]] = None) -> SplitAssignment:
    kind = SplitKind(kind)
    if kind is SplitKind.ORIGINAL:
        return split_original(corpus, seed)
    if kind is SplitKind.ALBUM:
        return split_album(corpus, seed)
    if kind is SplitKind.TIME:
        return split_time(corpus)
    if labels is None:
        raise ValueError("the day split needs day labels")
    return split_day(corpus, labels, seed)


def validate_split(
    corpus: Corpus,
    split: SplitAssignment,
    labels: Optional[Mapping[str, str]] = None,
) -> list[str]:
    """Describe every constraint the assignment violates; empty means valid."""
    problems: list[str] = []
    index = corpus.index
    for iid in itertools.chain(split.assignment, split.discarded):
        if iid not in index:
            problems.append(f"{iid}: unknown instance")
        elif corpus.get(iid).is_background:
            problems.append(f"{iid}: background instance in split")
    for iid in set(split.assignment) & split.discarded:
        problems.append(f"{iid}: both assigned and discarded")
    for iid, fold in split.assignment.items():
        if fold not in (0, 1):
            problems.append(f"{iid}: invalid fold {fold!r}")

    folds: dict[str, list[list[Instance]]] = defaultdict(lambda: [[], []])
    for inst in corpus:
        if inst.is_background:
            continue
        fold = split.assignment.get(inst.instance_id)
        if fold in (0, 1):
            folds[inst.identity][fold].append(inst)
        elif inst.instance_id not in split.discarded:
            problems.append(f"{inst.instance_id}: neither assigned nor discarded")

    for identity, (f0, f1) in folds.items():
        if not f0 or not f1:
            problems.append(f"{identity}: empty fold ({len(f0)}/{len(f1)})")
        if split.kind is SplitKind.DAY:
            if len(f0) != len(f1):
                problems.append(f"{identity}: unequal day folds ({len(f0)}/{len(f1)})")
            if min(len(f0), len(f1)) < DAY_MIN_FOLD:
                problems.append(f"{identity}: kept identity below minimum ({len(f0)}/{len(f1)})")
            if labels is not None:
                tags0 = {labels.get(m.instance_id) for m in f0}
                tags1 = {labels.get(m.instance_id) for m in f1}
                if tags0 & tags1:
                    problems.append(f"{identity}: day group in both folds")
        elif abs(len(f0) - len(f1)) > 1:
            problems.append(f"{identity}: fold imbalance ({len(f0)}/{len(f1)})")

        if split.kind is SplitKind.TIME:
            t0 = [corpus.photo_of(m).taken_at for m in f0 if corpus.photo_of(m).taken_at is not None]
            t1 = [corpus.photo_of(m).taken_at for m in f1 if corpus.photo_of(m).taken_at is not None]
            if t0 and t1 and max(t0) > min(t1):
                problems.append(f"{identity}: time ordering violated ({max(t0)} > {min(t1)})")
        if split.kind is SplitKind.ALBUM:
            sides: dict[str, set[int]] = defaultdict(set)
            for f, members in enumerate((f0, f1)):
                for m in members:
                    sides[album_key(corpus, m)].add(f)
            for key, used in sides.items():
                if len(used) > 1 and (identity, key) not in split.shared_albums:
                    problems.append(f"{identity}: album {key} split across folds without being shared")
    return problems


# --- files -----------------------------------------------------------------


def write_split(path, split: SplitAssignment) -> None:
    """``instance_id fold`` lines plus a ``.discarded`` sidecar."""
    path = Path(path)
    lines = [f"# kind {split.kind.value}"]
    lines += [f"# shared {ident} {album}" for ident, album in sorted(split.shared_albums)]
    lines += [f"{iid} {fold}" for iid, fold in split.assignment.items()]
    atomic_write_text(path, "\n".join(lines) + "\n")
    atomic_write_text(path.with_name(path.name + ".discarded"),
                      "".join(f"{iid}\n" for iid in sorted(split.discarded)))


def read_split(path, kind=None) -> SplitAssignment:
    path = Path(path)
    found_kind = None
    shared = set()
    assignment = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            toks = raw.split()
            if not toks:
                continue
            if toks[0] == "#":
                if len(toks) == 3 and toks[1] == "kind":
                    found_kind = SplitKind(toks[2])
                elif len(toks) == 4 and toks[1] == "shared":
                    shared.add((toks[2], toks[3]))
                continue
            if toks[0].startswith("#"):
                continue
            if len(toks) != 2 or toks[1] not in ("0", "1"):
                raise CorpusFormatError("expected 'instance_id fold'", lineno)
            if toks[0] in assignment:
                raise CorpusFormatError(f"duplicate instance_id {toks[0]!r}", lineno)
            assignment[toks[0]] = int(toks[1])
    sidecar = path.with_name(path.name + ".discarded")
    discarded = set(sidecar.read_text(encoding="utf-8").split()) if sidecar.exists() else set()
    kind = SplitKind(kind) if kind is not None else (found_kind or SplitKind.ORIGINAL)
    return SplitAssignment(kind, assignment, discarded, shared)


def read_day_labels(path) -> dict[str, str]:
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 2:
                raise CorpusFormatError("expected 'instance_id day_tag'", lineno)
            labels[toks[0]] = toks[1]
    return labels


def write_day_labels(path, labels: Mapping[str, str]) -> None:
    atomic_write_text(path, "".join(f"{iid} {tag}\n" for iid, tag in labels.items()))
