"""Command-line pipeline.

    multicue gen-synthetic --config run.yaml --out out/
    multicue split | embed | sweep-lambda | train | eval | openworld | report ...

Each subcommand reads its upstream artifacts from the output directory and
writes its own there, atomically. Failures print a single JSON line on
stderr and exit with 2 (config), 3 (missing artifact) or 4 (data).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.pipeline import Pipeline

from . import __version__
from .classify import OneVsRestLinearSVC, load_model, save_model
from .classify.model_io import ModelFormatError
from .config import ConfigError, RunConfig, load_config
from .corpus import Corpus, CorpusFormatError, atomic_write_text, load_corpus, save_corpus
from .evaluate import (
    cross_viewpoint_matrix,
    open_world_eval,
    per_identity_accuracy,
    resolution_tags,
    run_two_fold,
    sample_count_sweep,
    subset_accuracy,
    viewpoint_tags,
)
from .evaluate.closed import FoldResult, TwoFoldResult, gallery_filter, labelled_rows
from .evaluate.report import write_csv, write_json
from .features import lambda_grid
from .features.cache import CacheFormatError, EmbeddingTable, read_cache, write_cache
from .features.fusion import sweep as sweep_lambda, best_lambda
from .features.providers import SyntheticEmbedder, UnsupportedRegion, embed_corpus, region_of
from .features.rgb import RGBCropProvider
from .geometry import derive_regions, fit_regressors
from .pipeline import FeatureBank, Method
from .splits import SplitKind, make_split, read_day_labels, read_split, validate_split, write_day_labels, write_split
from .synthetic import generate_corpus

EXIT_CONFIG, EXIT_MISSING, EXIT_DATA = 2, 3, 4
VIEWPOINT_TAGS = ("FR", "NFR", "NFD")


class MissingArtifact(FileNotFoundError):
    pass


def _need(path: Path, what: str) -> Path:
    if not Path(path).exists():
        raise MissingArtifact(f"{what} not found: {path}")
    return Path(path)


# --- artifact locations -------------------------------------------------------


def split_path(cfg: RunConfig) -> Path:
    return cfg.out_dir / "split" / "split.txt"


def cache_path(cfg: RunConfig, cue: str) -> Path:
    return cfg.out_dir / "embeddings" / f"{cue}.cue"


def model_path(cfg: RunConfig, method: str, fold: int) -> Path:
    return cfg.out_dir / "models" / method / f"fold{fold}.model"


def lambda_json(cfg: RunConfig) -> Path:
    return cfg.out_dir / "lambda" / "lambda_sweep.json"


# --- loading ------------------------------------------------------------------


def _corpus(cfg: RunConfig) -> Corpus:
    return load_corpus(_need(cfg.annotations, "annotations"), _need(cfg.photos, "photo metadata"))


def _day_labels(cfg: RunConfig) -> Optional[dict]:
    if cfg.day_labels is None or not cfg.day_labels.exists():
        return None
    return read_day_labels(cfg.day_labels)


def _split(cfg: RunConfig):
    return read_split(_need(split_path(cfg), "split"))


def _bank(cfg: RunConfig, corpus: Corpus, cues) -> FeatureBank:
    tables = {c: read_cache(_need(cache_path(cfg, c), f"embedding cache for {c!r}")) for c in cues}
    return FeatureBank.from_tables(corpus, tables)


def _methods(cfg: RunConfig) -> list[Method]:
    """Configured methods with swept λ filled in."""
    swept = None
    out = []
    for spec in cfg.methods:
        m = spec.method
        if spec.lam_sweep:
            if swept is None:
                swept = json.loads(_need(lambda_json(cfg), "lambda sweep").read_text(encoding="utf-8"))
            try:
                m = m.with_lambda(swept["lambda_star"][m.name])
            except KeyError:
                raise MissingArtifact(f"lambda sweep has no entry for method {m.name!r}") from None
        out.append(m)
    return out


def _all_cues(methods) -> list[str]:
    seen: list[str] = []
    for m in methods:
        seen += [c for c in m.all_cues if c not in seen]
    return seen


def _meta(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "config": cfg.echo(), "seed": cfg.seed}


# --- subcommands --------------------------------------------------------------


def cmd_gen_synthetic(cfg: RunConfig) -> None:
    if cfg.synthetic is None:
        raise ConfigError("gen-synthetic needs a 'synthetic' section")
    data = generate_corpus(cfg.synthetic)
    corpus_dir = cfg.out_dir / "corpus"
    save_corpus(data.corpus, corpus_dir / "annotations.txt", corpus_dir / "photos.txt")
    write_day_labels(corpus_dir / "day_labels.txt", data.day_labels)
    provider = SyntheticEmbedder(cfg.synthetic.embedder, data.day_labels)
    ids = [inst.instance_id for inst in data.corpus]
    for cue in cfg.cues:
        if cue.provider == "synthetic":
            table = EmbeddingTable(cue.name, ids, embed_corpus(provider, data.corpus, cue.name))
            write_cache(corpus_dir / "embeddings" / f"{cue.name}.cue", table)
    write_json(corpus_dir / "synthetic.json", dict(_meta(cfg, "gen-synthetic"), spec=cfg.synthetic.to_dict(),
                                                  n_instances=len(data.corpus)))


def cmd_split(cfg: RunConfig) -> None:
    corpus = _corpus(cfg)
    labels = None
    if cfg.split_kind is SplitKind.DAY:
        labels = read_day_labels(_need(cfg.day_labels, "day labels"))
    split = make_split(cfg.split_kind, corpus, cfg.split_seed, labels)
    problems = validate_split(corpus, split, labels)
    if problems:
        raise ValueError(f"generated split is invalid: {problems[0]}")
    write_split(split_path(cfg), split)
    write_json(split_path(cfg).with_suffix(".json"), dict(
        _meta(cfg, "split"), kind=split.kind.value, split_seed=cfg.split_seed,
        fold_sizes=[len(split.fold_ids(0)), len(split.fold_ids(1))], n_discarded=len(split.discarded),
    ))


def _provider(cfg: RunConfig, cue, corpus: Corpus):
    if cue.provider == "synthetic":
        region_of(cue.name)
        return SyntheticEmbedder(cfg.synthetic.embedder, _day_labels(cfg))
    if cue.provider == "rgb":
        provider = RGBCropProvider(_need(cue.path, "crop directory"), cue.blur_radius)
        if not provider.supports(cue.name):
            raise UnsupportedRegion(f"RGB crops serve head cues only, not {cue.name!r}")
        return provider
    return None


def cmd_embed(cfg: RunConfig) -> None:
    corpus = _corpus(cfg)
    ids = [inst.instance_id for inst in corpus]
    for cue in cfg.cues:
        if cue.provider == "cache":
            source = read_cache(_need(cue.path, f"embedding cache for {cue.name!r}"))
            try:
                values = source.rows(ids)
            except KeyError as exc:
                raise ValueError(f"cache for {cue.name!r} lacks instance {exc.args[0]}") from None
        else:
            values = embed_corpus(_provider(cfg, cue, corpus), corpus, cue.name)
        write_cache(cache_path(cfg, cue.name), EmbeddingTable(cue.name, ids, values))

    head_to_face, _ = fit_regressors(corpus)
    rows = []
    for inst in corpus:
        face = inst.matched_face.box if inst.matched_face is not None else None
        regions = derive_regions(inst.head, corpus.photo_of(inst), face, head_to_face)
        for name, box in regions.as_dict().items():
            if box is not None:
                rows.append((inst.instance_id, name, box.x, box.y, box.w, box.h))
    write_csv(cfg.out_dir / "embeddings" / "regions.csv", ("instance_id", "region", "x", "y", "w", "h"), rows)


def cmd_sweep_lambda(cfg: RunConfig) -> None:
    corpus = _corpus(cfg)
    split = _split(cfg)
    targets = [s.method for s in cfg.methods if s.lam_sweep]
    if not targets:
        targets = [s.method for s in cfg.methods if s.method.mode.value == "weighted"]
    if not targets:
        raise ConfigError("sweep-lambda needs at least one weighted method")
    bank = _bank(cfg, corpus, _all_cues(targets))
    grid = lambda_grid()
    rows, star, best_acc = [], {}, {}
    for m in targets:
        curve = sweep_lambda(lambda lam: run_two_fold(corpus, split, bank, m.with_lambda(lam)).accuracy, grid)
        star[m.name], best_acc[m.name] = best_lambda(curve)
        rows += [(m.name, lam, acc) for lam, acc in curve]
    out = cfg.out_dir / "lambda"
    write_csv(out / "lambda_sweep.csv", ("method", "lam", "accuracy"), rows)
    write_json(lambda_json(cfg), dict(_meta(cfg, "sweep-lambda"), grid=grid, n_grid=len(grid),
                                      lambda_star=star, accuracy=best_acc))


def _train_rows(corpus: Corpus, split, fold: int):
    ids, y, folds = labelled_rows(corpus, split)
    keep = folds == fold
    return [i for i, k in zip(ids, keep) if k], y[keep]


def cmd_train(cfg: RunConfig) -> None:
    corpus = _corpus(cfg)
    split = _split(cfg)
    methods = [m for m in _methods(cfg) if m.classifier == "svm"]
    if not methods:
        raise ConfigError("train needs at least one svm method")
    bank = _bank(cfg, corpus, _all_cues(methods))
    summary = {}
    for m in methods:
        for fold in (0, 1):
            ids, y = _train_rows(corpus, split, fold)
            est = m.make_estimator(bank).fit(bank.matrix(m.all_cues, ids), y)
            clf = est.named_steps["clf"]
            save_model(model_path(cfg, m.name, fold), clf.gallery_)
            summary[f"{m.name}/fold{fold}"] = {
                "n_train": len(ids), "n_identities": len(clf.classes_),
                "converged": bool(clf.converged_.all()), "max_epochs": int(clf.n_iter_.max()),
            }
    write_json(cfg.out_dir / "models" / "train.json", dict(_meta(cfg, "train"), methods=[m.to_dict() for m in methods],
                                                           models=summary))


def _stored_estimator(cfg: RunConfig, m: Method, bank: FeatureBank, fold: int) -> Pipeline:
    model = load_model(_need(model_path(cfg, m.name, fold), f"model {m.name}/fold{fold}"))
    est = m.make_estimator(bank)
    fuse = est.named_steps["fuse"]
    fuse.fit(np.zeros((1, sum(fuse.block_sizes))))
    clf = OneVsRestLinearSVC.from_gallery(model, **est.named_steps["clf"].get_params())
    return Pipeline([("fuse", fuse), ("clf", clf)])


def _stored_two_fold(cfg: RunConfig, m: Method, corpus, split, bank) -> TwoFoldResult:
    ids, y, folds = labelled_rows(corpus, split)
    X = bank.matrix(m.all_cues, ids)
    results = []
    for fold in (0, 1):
        est = _stored_estimator(cfg, m, bank, fold)
        test_idx = np.flatnonzero(folds == 1 - fold)
        test_idx = test_idx[gallery_filter(y[folds == fold], y[test_idx])]
        pred = est.predict(X[test_idx]) if len(test_idx) else np.array([], dtype=y.dtype)
        results.append(FoldResult(fold, tuple(ids[i] for i in test_idx), y[test_idx], np.asarray(pred)))
    return TwoFoldResult(tuple(results))


def cmd_eval(cfg: RunConfig) -> None:
    corpus = _corpus(cfg)
    split = _split(cfg)
    methods = _methods(cfg)
    bank = _bank(cfg, corpus, _all_cues(methods))
    out = cfg.out_dir / "eval"
    acc_rows, vp_rows, res_rows, ident_rows = [], [], [], []
    summary = {}
    vp_tags, res_tags = viewpoint_tags(corpus), resolution_tags(corpus)
    for m in methods:
        if m.classifier == "svm":
            result = _stored_two_fold(cfg, m, corpus, split, bank)
        else:
            result = run_two_fold(corpus, split, bank, m)
        acc_rows.append((m.name, result.folds[0].accuracy, result.folds[1].accuracy, result.accuracy))
        summary[m.name] = {"accuracy": result.accuracy, "method": m.to_dict()}
        if "viewpoint" in cfg.analyses:
            vp_rows += [(m.name, s.tag, s.n, s.accuracy) for s in subset_accuracy(result, vp_tags).values()]
        if "resolution" in cfg.analyses:
            res_rows += [(m.name, s.tag, s.n, s.accuracy) for s in subset_accuracy(result, res_tags).values()]
        if "per_identity" in cfg.analyses:
            ia = per_identity_accuracy(result)
            ident_rows += [(m.name, k, ia.counts[k], v) for k, v in ia.per_identity.items()]
            summary[m.name].update(n_perfect=ia.n_perfect, n_zero=ia.n_zero)
        if "cross_viewpoint" in cfg.analyses:
            cells = cross_viewpoint_matrix(corpus, split, bank, m, VIEWPOINT_TAGS, VIEWPOINT_TAGS, vp_tags)
            write_csv(out / f"cross_viewpoint_{m.name}.csv", ("train_tag", "test_tag", "accuracy"),
                      [(tr, te, acc) for (tr, te), acc in cells.items()])
        if "sample_sweep" in cfg.analyses:
            points = sample_count_sweep(corpus, split, bank, m, cfg.sweep_counts, cfg.sweep_runs, cfg.seed)
            write_csv(out / f"sample_sweep_{m.name}.csv", ("n", "mean_acc", "std_acc"),
                      [(p.n, p.mean_acc, p.std_acc) for p in points])
    write_csv(out / "accuracy.csv", ("method", "fold0_acc", "fold1_acc", "accuracy"), acc_rows)
    if "viewpoint" in cfg.analyses:
        write_csv(out / "viewpoint.csv", ("method", "tag", "n", "accuracy"), vp_rows)
    if "resolution" in cfg.analyses:
        write_csv(out / "resolution.csv", ("method", "tag", "n", "accuracy"), res_rows)
    if "per_identity" in cfg.analyses:
        write_csv(out / "per_identity.csv", ("method", "identity", "n", "accuracy"), ident_rows)
    write_json(out / "eval.json", dict(_meta(cfg, "eval"), split=split.kind.value, methods=summary))


def cmd_openworld(cfg: RunConfig) -> None:
    name = cfg.openworld_method or next((s.method.name for s in cfg.methods if s.method.classifier == "svm"), None)
    if name is None:
        raise ConfigError("openworld needs an svm method")
    m = next(x for x in _methods(cfg) if x.name == name)
    corpus = _corpus(cfg)
    split = _split(cfg)
    bank = _bank(cfg, corpus, m.all_cues)
    result = open_world_eval(corpus, split, bank, m, 0, _stored_estimator(cfg, m, bank, 0))
    if not result.background_ids:
        raise ValueError("open-world evaluation needs background instances")
    curve = result.curve()
    out = cfg.out_dir / "openworld"
    write_csv(out / "openworld.csv", ("tau", "rr", "fppi"), [(p.tau, p.rr, p.fppi) for p in curve])
    at0 = result.counts(0.0)
    write_json(out / "openworld.json", dict(
        _meta(cfg, "openworld"), method=m.to_dict(), train_fold=0, n_eval=at0.n_eval,
        n_background=len(result.background_ids), n_images=result.n_images,
        closed_world_accuracy=result.closed_world_accuracy(), n_curve_points=len(curve),
        counts_at_zero={"tp_sound": at0.tp_sound, "tp_unsound": at0.tp_unsound, "fp": at0.fp, "fn": at0.fn},
    ))


def cmd_report(cfg: RunConfig) -> None:
    sources = {
        "split": split_path(cfg).with_suffix(".json"),
        "lambda": lambda_json(cfg),
        "train": cfg.out_dir / "models" / "train.json",
        "eval": cfg.out_dir / "eval" / "eval.json",
        "openworld": cfg.out_dir / "openworld" / "openworld.json",
    }
    sections = {}
    for key, path in sources.items():
        if path.exists():
            body = json.loads(path.read_text(encoding="utf-8"))
            body.pop("config", None)
            sections[key] = body
    if "eval" not in sections:
        raise MissingArtifact(f"eval results not found: {sources['eval']}")
    csvs = sorted(str(p.relative_to(cfg.out_dir)) for p in cfg.out_dir.rglob("*.csv"))
    write_json(cfg.out_dir / "report.json", dict(_meta(cfg, "report"), sections=sections, csv_files=csvs))
    lines = ["method,accuracy"] + [f"{name},{body['accuracy']!r}" for name, body in
                                   sorted(sections["eval"]["methods"].items())]
    atomic_write_text(cfg.out_dir / "report.csv", "\n".join(lines) + "\n")


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "split": cmd_split,
    "embed": cmd_embed,
    "train": cmd_train,
    "eval": cmd_eval,
    "openworld": cmd_openworld,
    "sweep-lambda": cmd_sweep_lambda,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multicue", description="Multi-cue person recognition pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="output directory (default: output_dir from the config)")
    parser.add_argument("--seed", type=int, help="override the config's top-level seed")
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "exit_code": code, "message": message}, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.seed)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING, "missing_artifact", str(exc))
    except (CorpusFormatError, CacheFormatError, ModelFormatError, UnsupportedRegion, ValueError, KeyError) as exc:
        return _fail(EXIT_DATA, "data", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
