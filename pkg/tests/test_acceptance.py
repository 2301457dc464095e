"""Acceptance criteria 1-9. Each test checks its own runtime limit.

Run with ``pytest -m acceptance -s`` to also see the per-criterion lines as
they happen; the terminal summary lists them all at the end.
"""

import math
import time
import warnings

import numpy as np
import pytest

from oracles import oracle_ovr, random_svm_problem
from multicue.classify import OneVsRestLinearSVC
from multicue.cli import main
from multicue.evaluate import open_world_counts, open_world_eval, run_two_fold, sample_count_sweep, subset_accuracy, viewpoint_tags
from multicue.features import FusionConfig, SyntheticEmbedder, SyntheticEmbedderConfig, fuse, lambda_grid, optimize_lambda
from multicue.pipeline import FeatureBank, Method
from multicue.splits import SplitKind, make_split, split_day, split_original, validate_split
from multicue.synthetic import SyntheticCorpusSpec, generate_corpus

VIEWPOINTS = ("FR", "NFR", "NFD")


def report(n, ok, detail):
    print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0

    @property
    def ok(self):
        return self.elapsed < self.limit


def synthetic_bank(spec, cues):
    syn = generate_corpus(spec)
    bank = FeatureBank.from_provider(SyntheticEmbedder(spec.embedder, syn.day_labels), syn.corpus, cues)
    return syn, bank


def uniform(factor):
    return {v: factor for v in VIEWPOINTS}


# --- 1 -------------------------------------------------------------------------------


@pytest.mark.acceptance(1)
def test_c1_svm_matches_oracle():
    worst_obj, disagreements = 0.0, []
    with Timer(10.0) as t:
        for seed in range(20):
            X, y, probes = random_svm_problem(seed)
            clf = OneVsRestLinearSVC().fit(X, y)
            W, F = oracle_ovr(X, y)
            ours = clf.objectives(X, y)
            worst_obj = max(worst_obj, float(np.max(np.abs(ours - F) / F)))

            Q = np.vstack([X, probes])
            mine = clf.predict(Q)
            S = np.hstack([Q, np.ones((len(Q), 1))]) @ W.T
            top = np.sort(S, axis=1)
            gap = top[:, -1] - top[:, -2]
            classes = np.unique(y)
            for i in range(len(Q)):
                best = classes[S[i] >= top[i, -1] - 1e-4]
                # outside the tie band the oracle's argmax is unambiguous
                if (gap[i] > 1e-4 and mine[i] != classes[S[i].argmax()]) or mine[i] not in best:
                    disagreements.append((seed, i))
    ok = worst_obj <= 1e-4 and not disagreements and t.ok
    report(1, ok, f"max rel objective diff {worst_obj:.2e}, {len(disagreements)} disagreements, {t.elapsed:.1f} s")
    assert worst_obj <= 1e-4
    assert not disagreements
    assert t.ok


# --- 2 -------------------------------------------------------------------------------


@pytest.mark.acceptance(2)
def test_c2_fusion_invariances():
    with Timer(5.0) as t:
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(200):
            parts = [rng.normal(size=d) for d in (3, 5, 7)]
            scales = rng.uniform(1e-3, 1e3, size=3)
            a = fuse(parts, FusionConfig("l2concat"))
            b = fuse([s * p for s, p in zip(scales, parts)], FusionConfig("l2concat"))
            worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))

        emb = SyntheticEmbedderConfig(seed=2, dim=16, noise_sigma=0.8)
        syn, bank = synthetic_bank(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20, embedder=emb, seed=2),
                                   ["b", "f"])
        assert len(syn.corpus) == 1000
        split = split_original(syn.corpus, 2)
        base = run_two_fold(syn.corpus, split, bank, Method("base", ("b",)))
        zero = run_two_fold(syn.corpus, split, bank, Method("w0", ("b",), mode="weighted", extra_cue="f", lam=0.0))
        same = all((f.y_pred == g.y_pred).all() and f.instance_ids == g.instance_ids
                   for f, g in zip(base.folds, zero.folds))
    ok = worst <= 1e-12 and same and t.ok
    report(2, ok, f"max rel scaling diff {worst:.1e}, lambda=0 predictions equal: {same}, {t.elapsed:.1f} s")
    assert worst <= 1e-12
    assert same
    assert t.ok


# --- 3 -------------------------------------------------------------------------------


@pytest.mark.acceptance(3)
def test_c3_end_to_end_separability():
    def accuracy(signal, classifier):
        emb = SyntheticEmbedderConfig(seed=42, dim=32, identity_signal=signal, noise_sigma=0.3)
        syn, bank = synthetic_bank(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20, embedder=emb, seed=42),
                                   ["h", "b"])
        split = split_original(syn.corpus, 42)
        return run_two_fold(syn.corpus, split, bank, Method("m", ("h", "b"), classifier=classifier)).accuracy

    with Timer(60.0) as t:
        separable = accuracy(1.0, "svm")
        blind = accuracy(0.0, "svm")
        chance = accuracy(0.0, "chance")
    ok = separable >= 0.99 and abs(blind - chance) <= 0.02 and t.ok
    report(3, ok, f"signal 1: {separable:.3f}; signal 0: {blind:.3f} vs chance {chance:.3f}; {t.elapsed:.1f} s")
    assert separable >= 0.99
    assert abs(blind - chance) <= 0.02
    assert t.ok


# --- 4 -------------------------------------------------------------------------------


@pytest.mark.acceptance(4)
def test_c4_open_world_curve():
    problems = []
    with Timer(30.0) as t:
        emb = SyntheticEmbedderConfig(seed=4, dim=32, noise_sigma=0.8, viewpoint_attenuation={"f": {"NFR": 0.5}})
        syn, bank = synthetic_bank(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20, n_background=300,
                                                       embedder=emb, seed=4), ["f"])
        split = split_original(syn.corpus, 4)
        n_points = 0
        for train_fold in (0, 1):
            res = open_world_eval(syn.corpus, split, bank, Method("face", ("f",)), train_fold)
            curve = res.curve()
            n_points += len(curve)
            if curve[0].tau != -math.inf or curve[-1].tau != math.inf:
                problems.append("grid lacks sentinels")
            for p, q in zip(curve, curve[1:]):
                if q.rr > p.rr or q.fppi > p.fppi:
                    problems.append(f"increase at tau={q.tau}")
            if abs(curve[0].rr - res.closed_world_accuracy()) > 1e-12:
                problems.append("RR(-inf) differs from closed-world accuracy")
            for p in curve:
                c = res.counts(p.tau)
                if c.tp_sound + c.tp_unsound + c.fn != c.n_eval or c.n_eval != len(res.gallery_ids):
                    problems.append(f"count identity broken at tau={p.tau}")
    ok = not problems and t.ok
    report(4, ok, f"{n_points} curve points, {len(problems)} violations, {t.elapsed:.1f} s")
    assert not problems, problems[:5]
    assert t.ok


# --- 5 -------------------------------------------------------------------------------


@pytest.mark.acceptance(5)
def test_c5_split_constraints():
    problems = []
    kept_day = 0
    with Timer(30.0) as t, warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for k in range(100):
            rng = np.random.default_rng([5, k])
            spec = SyntheticCorpusSpec(
                n_identities=int(rng.integers(2, 12)),
                instances_per_identity=int(rng.integers(2, 25)),
                albums_per_identity=int(rng.integers(1, 5)),
                day_groups_per_identity=int(rng.integers(1, 6)),
                n_background=int(rng.integers(0, 5)),
                missing_timestamp_rate=float(rng.choice([0.0, 0.1, 0.5])),
                seed=k,
            )
            syn = generate_corpus(spec)
            corpus = syn.corpus
            for kind in SplitKind:
                split = make_split(kind, corpus, k, syn.day_labels)
                problems += [f"corpus {k} {kind.value}: {p}" for p in validate_split(corpus, split, syn.day_labels)]
                per = {}
                for inst in corpus:
                    fold = split.assignment.get(inst.instance_id)
                    if fold is not None:
                        per.setdefault(inst.identity, [[], []])[fold].append(inst)
                for identity, (f0, f1) in per.items():
                    if kind is SplitKind.DAY:
                        kept_day += 1
                        if len(f0) != len(f1) or len(f0) < 5:
                            problems.append(f"corpus {k} day {identity}: {len(f0)}/{len(f1)}")
                    if kind is SplitKind.TIME:
                        t0 = [corpus.photo_of(m).taken_at for m in f0 if corpus.photo_of(m).taken_at is not None]
                        t1 = [corpus.photo_of(m).taken_at for m in f1 if corpus.photo_of(m).taken_at is not None]
                        if t0 and t1 and max(t0) > min(t1):
                            problems.append(f"corpus {k} time {identity}")
    ok = not problems and kept_day > 0 and t.ok
    report(5, ok, f"100 corpora x 4 splits, {kept_day} kept day identities, {len(problems)} violations, {t.elapsed:.1f} s")
    assert not problems, problems[:5]
    assert kept_day > 0
    assert t.ok


# --- 6 -------------------------------------------------------------------------------


@pytest.mark.acceptance(6)
def test_c6_viewpoint_trends():
    with Timer(60.0) as t:
        emb = SyntheticEmbedderConfig(
            seed=42, dim=32, noise_sigma=0.5, face_cue_missing_on_nfd=True,
            viewpoint_attenuation={"f": {"NFR": 0.5, "NFD": 0.0}, "b": uniform(0.25), "s": uniform(0.25)},
        )
        syn, bank = synthetic_bank(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20, embedder=emb, seed=42),
                                   ["f", "b", "s"])
        corpus = syn.corpus
        split = split_original(corpus, 42)
        tags = viewpoint_tags(corpus)

        def by_view(method):
            return {k: v.accuracy for k, v in subset_accuracy(run_two_fold(corpus, split, bank, method), tags).items()}

        face = by_view(Method("face", ("f",)))
        context = by_view(Method("context", ("b", "s")))
        chance = by_view(Method("chance", ("f",), classifier="chance"))
        combined = Method("combined", ("b", "s"), mode="weighted", extra_cue="f")
        lam, _ = optimize_lambda(lambda lam: run_two_fold(corpus, split, bank, combined.with_lambda(lam)).accuracy)
        fused = by_view(combined.with_lambda(lam))

    nfd_gap = abs(face["NFD"] - chance["NFD"])
    margins = {v: fused[v] - max(face[v], context[v]) for v in VIEWPOINTS}
    ok = nfd_gap <= 0.02 and all(m >= -0.01 for m in margins.values()) and t.ok
    report(6, ok, f"face NFD {face['NFD']:.3f} vs chance {chance['NFD']:.3f}; lambda*={lam}; "
                  f"margins {', '.join(f'{v} {m:+.3f}' for v, m in margins.items())}; {t.elapsed:.1f} s")
    assert nfd_gap <= 0.02
    assert all(m >= -0.01 for m in margins.values()), margins
    assert t.ok


# --- 7 -------------------------------------------------------------------------------


@pytest.mark.acceptance(7)
def test_c7_lambda_sweep():
    grid = lambda_grid()

    def lam_star(rho):
        emb = SyntheticEmbedderConfig(
            seed=7, dim=32, noise_sigma=0.9,
            viewpoint_attenuation={"f": {"NFR": 0.5, "NFD": 0.0}, "b": uniform(0.5), "s": uniform(0.5)},
            # clothing and scene change between days, the face does not
            day_specificity={"b": rho, "s": rho},
        )
        syn, bank = synthetic_bank(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20,
                                                       day_groups_per_identity=4, embedder=emb, seed=7), ["f", "b", "s"])
        split = split_day(syn.corpus, syn.day_labels, 7)
        m = Method("combined", ("b", "s"), mode="weighted", extra_cue="f")
        return optimize_lambda(lambda lam: run_two_fold(syn.corpus, split, bank, m.with_lambda(lam)).accuracy, grid)

    with Timer(300.0) as t:
        no_gap, _ = lam_star(0.0)
        gap, _ = lam_star(0.8)
    grid_ok = len(grid) == 61 and grid[0] == 0.0 and grid[-1] == 3.0 and np.allclose(np.diff(grid), 0.05)
    ok = grid_ok and gap > no_gap and t.ok
    report(7, ok, f"{len(grid)} grid points; lambda* no gap {no_gap}, day gap {gap}; {t.elapsed:.1f} s")
    assert grid_ok
    assert gap > no_gap
    assert t.ok


# --- 8 -------------------------------------------------------------------------------


@pytest.mark.acceptance(8)
def test_c8_sample_count_sweep():
    with Timer(300.0) as t:
        emb = SyntheticEmbedderConfig(seed=8, dim=32, noise_sigma=0.8)
        syn, bank = synthetic_bank(SyntheticCorpusSpec(n_identities=50, instances_per_identity=20, embedder=emb, seed=8),
                                   ["h", "b"])
        split = split_original(syn.corpus, 8)
        m = Method("m", ("h", "b"))
        counts = [1, 2, 5, 10]  # 10 is every training instance of every identity
        first = sample_count_sweep(syn.corpus, split, bank, m, counts, runs=10, seed=8)
        second = sample_count_sweep(syn.corpus, split, bank, m, counts, runs=10, seed=8)
    runs_ok = all(len(p.runs) == 10 for p in first)
    by_n = {p.n: p for p in first}
    repro = [(p.mean_acc, p.std_acc) for p in first] == [(p.mean_acc, p.std_acc) for p in second]
    ok = runs_ok and by_n[10].mean_acc >= by_n[1].mean_acc and repro and t.ok
    report(8, ok, f"mean acc by n: {', '.join(f'{p.n}: {p.mean_acc:.3f}+-{p.std_acc:.3f}' for p in first)}; "
                  f"reproducible: {repro}; {t.elapsed:.1f} s")
    assert runs_ok
    assert by_n[10].mean_acc >= by_n[1].mean_acc
    assert repro
    assert t.ok


# --- 9 -------------------------------------------------------------------------------


@pytest.mark.acceptance(9)
def test_c9_determinism(tmp_path):
    from pathlib import Path

    config = Path(__file__).resolve().parent.parent / "configs" / "synthetic.yaml"
    commands = ("gen-synthetic", "split", "embed", "sweep-lambda", "train", "eval", "openworld", "report")
    for out in ("first", "second"):
        for cmd in commands:
            assert main([cmd, "--config", str(config), "--out", str(tmp_path / out)]) == 0, cmd

    def files(d):
        return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*"))
                if p.is_file() and p.suffix in (".csv", ".json")}

    a, b = files(tmp_path / "first"), files(tmp_path / "second")
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    ok = bool(a) and not differing
    report(9, ok, f"{len(a)} CSV/JSON outputs compared, {len(differing)} differ")
    assert a
    assert not differing, differing
