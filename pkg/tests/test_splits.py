import warnings

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from multicue.corpus import BBox, Corpus, Instance, PhotoMeta
from multicue.splits import (
    SplitAssignment,
    SplitKind,
    make_split,
    read_day_labels,
    read_split,
    split_album,
    split_day,
    split_original,
    split_time,
    validate_split,
    write_day_labels,
    write_split,
)
from multicue.synthetic import SyntheticCorpusSpec, generate_corpus


def build(rows):
    """Corpus from ``(instance_id, identity, album, taken_at)`` rows, one photo each."""
    photos, instances = {}, []
    for iid, identity, album, taken in rows:
        photos[f"p_{iid}"] = PhotoMeta(f"p_{iid}", album, taken, 100.0, 100.0)
        instances.append(Instance(iid, f"p_{iid}", BBox(0, 0, 10, 10), identity, None))
    return Corpus(photos, tuple(instances))


def sizes(split, corpus, identity="x"):
    out = [0, 0]
    for inst in corpus:
        if inst.identity == identity and inst.instance_id in split.assignment:
            out[split.assignment[inst.instance_id]] += 1
    return out


def albums_corpus(album_sizes):
    rows = []
    for a, n in enumerate(album_sizes):
        rows += [(f"i{a}_{j}", "x", f"alb{a}", j) for j in range(n)]
    return build(rows)


def day_corpus(group_sizes):
    rows, labels = [], {}
    for g, n in enumerate(group_sizes):
        for j in range(n):
            iid = f"i{g}_{j}"
            rows.append((iid, "x", None, 100 * g + j))
            labels[iid] = f"d{g}"
    return build(rows), labels


# --- Original ------------------------------------------------------------------------


@pytest.mark.parametrize("n, expect", [(10, [5, 5]), (9, [5, 4])])
def test_original_halving(n, expect):
    corpus = build([(f"i{j}", "x", None, None) for j in range(n)])
    split = split_original(corpus, seed=3)
    assert sizes(split, corpus) == expect
    assert not split.discarded


def test_original_deterministic_and_seed_sensitive():
    corpus = build([(f"i{j}", "x", None, None) for j in range(20)])
    assert split_original(corpus, 1).assignment == split_original(corpus, 1).assignment
    assert any(split_original(corpus, s).assignment != split_original(corpus, 1).assignment for s in range(2, 6))


def test_original_discards_singleton_identity():
    corpus = build([("a", "x", None, None), ("b", "x", None, None), ("c", "lonely", None, None)])
    with pytest.warns(UserWarning, match="lonely"):
        split = split_original(corpus)
    assert split.discarded == {"c"}


# --- Album ---------------------------------------------------------------------------


def test_album_greedy_then_share():
    # greedy: 4 -> fold 0, 3 -> fold 1, 3 -> fold 1 gives 4/6; one instance of
    # a 3-album on the heavy side moves across, ending 5/5
    corpus = albums_corpus([4, 3, 3])
    split = split_album(corpus, seed=0)
    assert sizes(split, corpus) == [5, 5]
    assert len(split.shared_albums) == 1
    (identity, album), = split.shared_albums
    assert identity == "x" and album in ("alb1", "alb2")
    assert validate_split(corpus, split) == []
    # the four-instance album stays whole
    assert {split.assignment[f"i0_{j}"] for j in range(4)} == {0}


def test_album_single_album_is_shared():
    corpus = albums_corpus([7])
    split = split_album(corpus, seed=0)
    assert sorted(sizes(split, corpus)) == [3, 4]
    assert split.shared_albums == {("x", "alb0")}
    assert validate_split(corpus, split) == []


def test_album_two_equal_albums():
    corpus = albums_corpus([4, 4])
    split = split_album(corpus, seed=0)
    assert sizes(split, corpus) == [4, 4]
    assert not split.shared_albums
    assert {split.assignment[f"i0_{j}"] for j in range(4)} != {split.assignment[f"i1_{j}"] for j in range(4)}


def test_album_missing_album_is_singleton():
    corpus = build([("a", "x", None, 1), ("b", "x", None, 2), ("c", "x", "A", 3), ("d", "x", "A", 4)])
    split = split_album(corpus)
    assert sizes(split, corpus) == [2, 2]
    assert not split.shared_albums


# --- Time ----------------------------------------------------------------------------


def test_time_sorted_halves():
    corpus = build([("i3", "x", None, 30), ("i1", "x", None, 10), ("i4", "x", None, 40), ("i2", "x", None, 20)])
    split = split_time(corpus)
    assert split.assignment == {"i3": 1, "i1": 0, "i4": 1, "i2": 0}


def test_time_odd_count_extra_to_fold0():
    corpus = build([(f"i{j}", "x", None, j) for j in range(5)])
    assert sizes(split_time(corpus), corpus) == [3, 2]


def test_time_missing_timestamps_alternate():
    corpus = build([(f"i{j}", "x", None, None) for j in range(4)])
    split = split_time(corpus)
    assert [split.assignment[f"i{j}"] for j in range(4)] == [0, 1, 0, 1]


def test_time_missing_start_with_smaller_fold():
    corpus = build([("a", "x", None, 1), ("b", "x", None, 2), ("c", "x", None, 3), ("u", "x", None, None)])
    split = split_time(corpus)
    assert split.assignment["u"] == 1
    assert sizes(split, corpus) == [2, 2]


def test_time_ties_by_instance_id():
    corpus = build([("b", "x", None, 5), ("a", "x", None, 5), ("d", "x", None, 5), ("c", "x", None, 5)])
    split = split_time(corpus)
    assert split.assignment == {"b": 0, "a": 0, "d": 1, "c": 1}


# --- Day -----------------------------------------------------------------------------


def test_day_balance_then_discard():
    corpus, labels = day_corpus([6, 5])
    split = split_day(corpus, labels, seed=0)
    assert sizes(split, corpus) == [5, 5]
    assert len(split.discarded) == 1
    assert next(iter(split.discarded)).startswith("i0_")
    assert validate_split(corpus, split, labels) == []


def test_day_small_identity_discarded():
    corpus, labels = day_corpus([3, 2])
    split = split_day(corpus, labels)
    assert split.assignment == {}
    assert len(split.discarded) == 5


def test_day_already_balanced():
    corpus, labels = day_corpus([5, 5])
    split = split_day(corpus, labels)
    assert sizes(split, corpus) == [5, 5] and not split.discarded


def test_day_single_group_discarded_with_warning():
    corpus, labels = day_corpus([10])
    with pytest.warns(UserWarning, match="single day group"):
        split = split_day(corpus, labels)
    assert len(split.discarded) == 10


def test_day_bipartition_exhaustive():
    # {7, 4, 4, 3}: best bipartition is 7+3 vs 4+4 -> keep 8/8
    corpus, labels = day_corpus([7, 4, 4, 3])
    split = split_day(corpus, labels)
    assert sizes(split, corpus) == [8, 8]
    assert len(split.discarded) == 2


def test_day_greedy_above_fifteen_groups():
    corpus, labels = day_corpus([1] * 17 + [2])
    split = split_day(corpus, labels)
    assert sizes(split, corpus) == [9, 9]
    assert validate_split(corpus, split, labels) == []


def test_day_partial_labels_is_error():
    corpus, labels = day_corpus([5, 5])
    del labels["i0_0"]
    with pytest.raises(ValueError, match="part of identity"):
        split_day(corpus, labels)


def test_make_split_day_needs_labels():
    corpus, _ = day_corpus([5, 5])
    with pytest.raises(ValueError):
        make_split("day", corpus)


# --- validation ------------------------------------------------------------------------


def test_validate_day_below_minimum():
    corpus, labels = day_corpus([4, 4])
    split = SplitAssignment(SplitKind.DAY, {f"i{g}_{j}": g for g in range(2) for j in range(4)})
    assert any("below minimum" in p for p in validate_split(corpus, split, labels))


def test_validate_time_ordering():
    corpus = build([(f"i{j}", "x", None, 10 * j) for j in range(4)])
    split = SplitAssignment(SplitKind.TIME, {"i0": 0, "i1": 1, "i2": 1, "i3": 0})
    assert any("time ordering" in p for p in validate_split(corpus, split))


def test_validate_album_purity():
    corpus = albums_corpus([2, 2])
    split = SplitAssignment(SplitKind.ALBUM, {"i0_0": 0, "i0_1": 1, "i1_0": 1, "i1_1": 0})
    problems = validate_split(corpus, split)
    assert any("without being shared" in p for p in problems)
    split.shared_albums = {("x", "alb0"), ("x", "alb1")}
    assert validate_split(corpus, split) == []


def test_validate_unassigned_and_double():
    corpus = build([("a", "x", None, 1), ("b", "x", None, 2), ("c", "x", None, 3)])
    split = SplitAssignment(SplitKind.ORIGINAL, {"a": 0, "b": 1}, {"b"})
    problems = validate_split(corpus, split)
    assert any("c: neither" in p for p in problems)
    assert any("b: both" in p for p in problems)


# --- files ---------------------------------------------------------------------------


def test_split_file_round_trip(tmp_path):
    corpus = albums_corpus([4, 3, 3])
    split = split_album(corpus)
    split.discarded.add("ghost")
    write_split(tmp_path / "split.txt", split)
    back = read_split(tmp_path / "split.txt")
    assert back == split
    lines = (tmp_path / "split.txt").read_text().splitlines()
    assert "i0_0 0" in lines
    assert (tmp_path / "split.txt.discarded").read_text() == "ghost\n"


def test_day_labels_round_trip(tmp_path):
    labels = {"a": "d1", "b": "d2"}
    write_day_labels(tmp_path / "days.txt", labels)
    assert (tmp_path / "days.txt").read_text() == "a d1\nb d2\n"
    assert read_day_labels(tmp_path / "days.txt") == labels


# --- properties -------------------------------------------------------------------------


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10_000), st.integers(2, 8), st.integers(1, 4), st.integers(1, 5),
       st.floats(0, 0.5), st.integers(0, 20))
def test_generators_pass_validation(seed, n_ids, albums, days, missing, n_per):
    spec = SyntheticCorpusSpec(n_identities=n_ids, instances_per_identity=n_per + 2, albums_per_identity=albums,
                               day_groups_per_identity=days, seed=seed, missing_timestamp_rate=missing)
    syn = generate_corpus(spec)
    corpus = syn.corpus
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for kind in SplitKind:
            a = make_split(kind, corpus, seed, syn.day_labels)
            b = make_split(kind, corpus, seed, syn.day_labels)
            assert a == b
            assert validate_split(corpus, a, syn.day_labels) == []
            assert not set(a.assignment) & a.discarded
            for identity in {i.identity for i in corpus}:
                f0, f1 = sizes(a, corpus, identity)
                if f0 + f1 == 0:
                    continue
                if kind is SplitKind.DAY:
                    assert f0 == f1 >= 5
                else:
                    assert abs(f0 - f1) <= 1
