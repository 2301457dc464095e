from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from multicue.corpus import Viewpoint, save_corpus
from multicue.synthetic import DEFAULT_VIEWPOINT_MIX, SyntheticCorpusSpec, generate_corpus, viewpoint_quotas


def test_default_mix_matches_reference_shares():
    # FR 41.29%, NFR 27.10%, NFD 31.60% of the annotated heads
    assert DEFAULT_VIEWPOINT_MIX == (0.4129, 0.2710, 0.3160)
    spec = SyntheticCorpusSpec()
    assert [round(p, 2) for p in spec.viewpoint_mix] == [0.41, 0.27, 0.32]
    assert sum(spec.viewpoint_mix) == pytest.approx(1.0, abs=1e-12)


def test_fifty_by_twenty():
    syn = generate_corpus(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20, seed=42))
    assert len(syn.corpus) == 1000
    counts = Counter(i.viewpoint for i in syn.corpus)
    assert [counts[v] for v in (Viewpoint.FR, Viewpoint.NFR, Viewpoint.NFD)] == viewpoint_quotas(1000, DEFAULT_VIEWPOINT_MIX)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 5000), st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
def test_quotas_within_one(n, raw):
    mix = [p / sum(raw) for p in raw]
    q = viewpoint_quotas(n, mix)
    assert sum(q) == n
    assert all(abs(c - n * p) < 1 for c, p in zip(q, mix))


def test_same_seed_identical_files(tmp_path):
    spec = SyntheticCorpusSpec(n_identities=5, instances_per_identity=6, n_background=4, seed=9,
                               missing_timestamp_rate=0.2)
    for d in ("a", "b"):
        save_corpus(generate_corpus(spec).corpus, tmp_path / d / "ann.txt", tmp_path / d / "photos.txt")
    for name in ("ann.txt", "photos.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    other = SyntheticCorpusSpec(n_identities=5, instances_per_identity=6, n_background=4, seed=10)
    save_corpus(generate_corpus(other).corpus, tmp_path / "c" / "ann.txt", tmp_path / "c" / "photos.txt")
    assert (tmp_path / "c" / "ann.txt").read_bytes() != (tmp_path / "a" / "ann.txt").read_bytes()


def test_structure():
    spec = SyntheticCorpusSpec(n_identities=4, instances_per_identity=9, albums_per_identity=3,
                               day_groups_per_identity=3, n_background=7, seed=1)
    syn = generate_corpus(spec)
    bg = [i for i in syn.corpus if i.is_background]
    assert len(bg) == 7 and all(i.matched_face is not None for i in bg)
    for inst in syn.corpus:
        if inst.identity is None:
            continue
        assert syn.day_labels[inst.instance_id].startswith(inst.identity + "_d")
        assert syn.corpus.photo_of(inst).album_id.startswith(inst.identity + "_a")
    per_id_days = Counter(syn.day_labels.values())
    assert len(per_id_days) == 4 * 3 and set(per_id_days.values()) == {3}


def test_total_instances():
    spec = SyntheticCorpusSpec(n_identities=581, total_instances=6443)
    assert spec.n_instances == 6443
    assert max(spec.per_identity_counts) - min(spec.per_identity_counts) == 1


@pytest.mark.parametrize("kwargs", [
    {"n_identities": 0},
    {"viewpoint_mix": (0.5, 0.5, 0.5)},
    {"viewpoint_mix": (0.5, 0.5)},
    {"n_background": -1},
    {"missing_timestamp_rate": 1.5},
    {"n_identities": 10, "total_instances": 5},
])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        SyntheticCorpusSpec(**kwargs)
