"""Run configuration: one YAML file describes an experiment end to end.

Relative paths resolve against the directory holding the config file. When
the ``corpus`` section is absent the files written by ``gen-synthetic`` under
the output directory are used. All randomness derives from the top-level
``seed`` unless a section names its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .features.fusion import FusionMode
from .features.providers import SyntheticEmbedderConfig
from .pipeline import CLASSIFIERS, Method
from .splits import SplitKind
from .synthetic import DEFAULT_VIEWPOINT_MIX, SyntheticCorpusSpec

PROVIDERS = ("synthetic", "rgb", "cache")
ANALYSES = ("per_identity", "viewpoint", "resolution", "cross_viewpoint", "sample_sweep")
SWEEP = "sweep"


class ConfigError(ValueError):
    pass


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"{where}: missing key {key!r}")
    return table[key]


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected a mapping")
    return value


def _no_extra(table: dict, allowed, where: str) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}")


@dataclass(frozen=True)
class CueSpec:
    name: str
    provider: str
    path: Optional[Path] = None
    blur_radius: int = 1


@dataclass(frozen=True)
class MethodSpec:
    """A method whose λ may be left to the sweep (``lam_sweep``)."""

    method: Method
    lam_sweep: bool = False


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out_dir: Path
    annotations: Path
    photos: Path
    day_labels: Optional[Path]
    split_kind: SplitKind
    split_seed: int
    cues: tuple[CueSpec, ...]
    methods: tuple[MethodSpec, ...]
    synthetic: Optional[SyntheticCorpusSpec]
    analyses: tuple[str, ...] = ()
    sweep_counts: tuple[int, ...] = (1, 2, 4, 8)
    sweep_runs: int = 10
    openworld_method: Optional[str] = None
    raw: dict = field(default_factory=dict)

    def method(self, name: str) -> MethodSpec:
        for spec in self.methods:
            if spec.method.name == name:
                return spec
        raise ConfigError(f"no method named {name!r}")

    def echo(self) -> dict:
        """The effective configuration as embedded in every JSON output."""
        return dict(self.raw, seed=self.seed)


def _embedder(table: dict, seed: int) -> SyntheticEmbedderConfig:
    _no_extra(table, ("seed", "dim", "identity_signal", "noise_sigma", "viewpoint_attenuation",
                      "day_specificity", "face_cue_missing_on_nfd"), "synthetic.embedder")
    try:
        return SyntheticEmbedderConfig(
            seed=int(table.get("seed", seed)),
            dim=int(table.get("dim", 32)),
            identity_signal=float(table.get("identity_signal", 1.0)),
            noise_sigma=float(table.get("noise_sigma", 0.3)),
            viewpoint_attenuation={str(k): {str(vp): float(f) for vp, f in v.items()}
                                   for k, v in (table.get("viewpoint_attenuation") or {}).items()},
            day_specificity={str(k): float(v) for k, v in (table.get("day_specificity") or {}).items()},
            face_cue_missing_on_nfd=bool(table.get("face_cue_missing_on_nfd", False)),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"synthetic.embedder: {exc}") from None


def _synthetic(table: dict, seed: int) -> SyntheticCorpusSpec:
    _no_extra(table, ("n_identities", "instances_per_identity", "albums_per_identity", "day_groups_per_identity",
                      "viewpoint_mix", "n_background", "missing_timestamp_rate", "seed", "embedder",
                      "total_instances"), "synthetic")
    corpus_seed = int(table.get("seed", seed))
    try:
        return SyntheticCorpusSpec(
            n_identities=int(table.get("n_identities", 50)),
            instances_per_identity=int(table.get("instances_per_identity", 20)),
            albums_per_identity=int(table.get("albums_per_identity", 2)),
            day_groups_per_identity=int(table.get("day_groups_per_identity", 2)),
            viewpoint_mix=tuple(table.get("viewpoint_mix", DEFAULT_VIEWPOINT_MIX)),
            n_background=int(table.get("n_background", 0)),
            embedder=_embedder(table.get("embedder") or {}, corpus_seed),
            seed=corpus_seed,
            missing_timestamp_rate=float(table.get("missing_timestamp_rate", 0.0)),
            total_instances=None if table.get("total_instances") is None else int(table["total_instances"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"synthetic: {exc}") from None


def _method(table: dict, seed: int, svm: dict, cue_names: set) -> MethodSpec:
    where = f"methods.{table.get('name', '?')}"
    _no_extra(table, ("name", "cues", "mode", "lam", "extra_cue", "base_mode", "classifier"), where)
    name = str(_require(table, "name", "methods"))
    cues = table.get("cues")
    if not isinstance(cues, list) or not cues:
        raise ConfigError(f"{where}: cues must be a non-empty list")
    lam = table.get("lam", 1.0)
    lam_sweep = lam == SWEEP
    classifier = table.get("classifier", "svm")
    if classifier not in CLASSIFIERS:
        raise ConfigError(f"{where}: classifier must be one of {CLASSIFIERS}")
    try:
        method = Method(
            name=name,
            cues=tuple(str(c) for c in cues),
            mode=FusionMode(table.get("mode", "l2concat")),
            lam=1.0 if lam_sweep else float(lam),
            extra_cue=table.get("extra_cue"),
            base_mode=FusionMode(table.get("base_mode", "concat")),
            classifier=classifier,
            C=float(svm.get("C", 1.0)),
            tol=float(svm.get("tol", 1e-6)),
            max_iter=int(svm.get("max_iter", 1000)),
            seed=int(svm.get("seed", seed)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if lam_sweep and method.mode is not FusionMode.WEIGHTED:
        raise ConfigError(f"{where}: lam 'sweep' needs weighted mode")
    unknown = [c for c in method.all_cues if c not in cue_names]
    if unknown:
        raise ConfigError(f"{where}: cues {unknown} are not declared under 'cues'")
    return MethodSpec(method, lam_sweep)


def parse_config(raw: Any, base_dir: Union[str, Path], out_dir: Optional[Union[str, Path]] = None,
                 seed: Optional[int] = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    _no_extra(raw, ("seed", "output_dir", "synthetic", "corpus", "split", "cues", "methods", "svm",
                    "analyses", "sample_sweep", "openworld"), "config")
    base_dir = Path(base_dir)

    def resolve(p) -> Path:
        p = Path(str(p))
        return p if p.is_absolute() else base_dir / p

    try:
        seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer") from None
    out = Path(out_dir) if out_dir is not None else resolve(raw.get("output_dir", "out"))

    synthetic = _synthetic(_section(raw, "synthetic"), seed) if "synthetic" in raw else None

    corpus = _section(raw, "corpus")
    _no_extra(corpus, ("annotations", "photos", "day_labels"), "corpus")
    if corpus:
        annotations = resolve(_require(corpus, "annotations", "corpus"))
        photos = resolve(_require(corpus, "photos", "corpus"))
        day_labels = resolve(corpus["day_labels"]) if corpus.get("day_labels") else None
    else:
        annotations = out / "corpus" / "annotations.txt"
        photos = out / "corpus" / "photos.txt"
        day_labels = out / "corpus" / "day_labels.txt"

    split = _section(raw, "split")
    _no_extra(split, ("kind", "seed"), "split")
    try:
        split_kind = SplitKind(split.get("kind", "original"))
    except ValueError:
        raise ConfigError(f"split.kind must be one of {[k.value for k in SplitKind]}") from None
    if split_kind is SplitKind.DAY and day_labels is None:
        raise ConfigError("split.kind 'day' needs corpus.day_labels")

    cues = []
    for entry in raw.get("cues") or []:
        if not isinstance(entry, dict):
            raise ConfigError("cues: each entry must be a mapping")
        _no_extra(entry, ("name", "provider", "path", "blur_radius"), "cues")
        provider = entry.get("provider", "synthetic")
        if provider not in PROVIDERS:
            raise ConfigError(f"cues: provider must be one of {PROVIDERS}")
        if provider in ("rgb", "cache") and "path" not in entry:
            raise ConfigError(f"cues.{entry.get('name')}: provider {provider!r} needs a path")
        if provider == "synthetic" and synthetic is None:
            raise ConfigError("synthetic cues need a 'synthetic' section")
        cues.append(CueSpec(str(_require(entry, "name", "cues")), provider,
                            resolve(entry["path"]) if "path" in entry else None,
                            int(entry.get("blur_radius", 1))))
    if not cues:
        raise ConfigError("cues: at least one cue is required")
    names = [c.name for c in cues]
    if len(set(names)) != len(names):
        raise ConfigError("cues: names must be unique")

    svm = _section(raw, "svm")
    _no_extra(svm, ("C", "tol", "max_iter", "seed"), "svm")
    methods = tuple(_method(m, seed, svm, set(names)) for m in raw.get("methods") or [])
    if not methods:
        raise ConfigError("methods: at least one method is required")
    if len({m.method.name for m in methods}) != len(methods):
        raise ConfigError("methods: names must be unique")

    analyses = tuple(raw.get("analyses") or ())
    bad = [a for a in analyses if a not in ANALYSES]
    if bad:
        raise ConfigError(f"analyses: unknown {bad}; choose from {ANALYSES}")
    sweep = _section(raw, "sample_sweep")
    _no_extra(sweep, ("counts", "runs"), "sample_sweep")
    counts = tuple(int(n) for n in sweep.get("counts", (1, 2, 4, 8)))
    if not counts or any(n <= 0 for n in counts) or int(sweep.get("runs", 10)) <= 0:
        raise ConfigError("sample_sweep: counts and runs must be positive")

    ow = _section(raw, "openworld")
    _no_extra(ow, ("method",), "openworld")
    cfg = RunConfig(
        seed=seed,
        out_dir=out,
        annotations=annotations,
        photos=photos,
        day_labels=day_labels,
        split_kind=split_kind,
        split_seed=int(split.get("seed", seed)),
        cues=tuple(cues),
        methods=methods,
        synthetic=synthetic,
        analyses=analyses,
        sweep_counts=counts,
        sweep_runs=int(sweep.get("runs", 10)),
        openworld_method=ow.get("method"),
        raw=raw,
    )
    if cfg.openworld_method is not None:
        spec = cfg.method(cfg.openworld_method)
        if spec.method.classifier != "svm":
            raise ConfigError("openworld.method must use the svm classifier")
    return cfg


def load_config(path: Union[str, Path], out_dir=None, seed: Optional[int] = None) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}".replace("\n", " ")) from None
    return parse_config(raw, path.parent, out_dir, seed)
