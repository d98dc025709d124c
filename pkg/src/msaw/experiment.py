"""Experiment configuration and orchestration shared by the CLI commands.

An experiment is described by one JSON config: where the season CSVs and the
schema live, which season is the target stream, which methods to run over it,
and the adaptive-weighting hyperparameters. Season files are discovered as
``<season_id>.csv`` inside ``data_dir`` unless the config lists them
explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .data_model import Schema, SeasonDataset, load_schema, load_season_csv, split_by_season
from .ensemble import EnsembleState, MsawConfig, WeightStrategy, run_stream
from .evaluation import (
    EvalRecord,
    MetricReport,
    auroc,
    compare_methods,
    evaluate_static,
)
from .naive_bayes import NaiveBayesModel, fit_batch, fit_pooled

METHOD_KINDS = (
    "pretrained_pooled",
    "online",
    "online_pretrained",
    "equal",
    "volume",
    "time",
    "msaw",
)


class ConfigError(ValueError):
    """Raised when an experiment config is structurally invalid."""


@dataclass(frozen=True)
class ExperimentConfig:
    data_dir: Path
    schema_path: Path
    target_season: str
    methods: tuple[str, ...]
    msaw: MsawConfig = MsawConfig()
    smoothing: float = 1.0
    output_dir: Path = Path("results")
    seed: int | None = None
    snapshot_stride: int = 1000
    seasons: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.methods:
            raise ConfigError("config lists no methods")
        unknown = [m for m in self.methods if m not in METHOD_KINDS]
        if unknown:
            raise ConfigError(
                f"unknown method kinds {unknown}; expected subset of {METHOD_KINDS}"
            )
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate method kinds in config")
        if self.smoothing <= 0:
            raise ConfigError("smoothing must be positive")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return config_from_dict(obj, base_dir=path.parent)


def config_from_dict(obj: Mapping, base_dir: Path | None = None) -> ExperimentConfig:
    base = base_dir or Path(".")

    def _resolve(p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        data_dir = _resolve(obj["data_dir"])
        schema_path = _resolve(obj["schema_path"])
        target_season = str(obj["target_season"])
        raw_methods = obj["methods"]
    except KeyError as exc:
        raise ConfigError(f"config missing required key {exc}") from None

    methods = []
    for entry in raw_methods:
        if isinstance(entry, str):
            methods.append(entry)
        elif isinstance(entry, Mapping) and "kind" in entry:
            methods.append(str(entry["kind"]))
        else:
            raise ConfigError(f"method descriptor {entry!r} lacks a kind")

    msaw_obj = obj.get("msaw", {})
    msaw_cfg = MsawConfig(
        alpha=float(msaw_obj.get("alpha", MsawConfig.alpha)),
        beta=float(msaw_obj.get("beta", MsawConfig.beta)),
        decision_threshold=float(
            msaw_obj.get("decision_threshold", MsawConfig.decision_threshold)
        ),
    )
    seasons = obj.get("seasons")
    return ExperimentConfig(
        data_dir=data_dir,
        schema_path=schema_path,
        target_season=target_season,
        methods=tuple(methods),
        msaw=msaw_cfg,
        smoothing=float(obj.get("smoothing", 1.0)),
        output_dir=_resolve(obj.get("output_dir", "results")),
        seed=obj.get("seed"),
        snapshot_stride=int(obj.get("snapshot_stride", 1000)),
        seasons=tuple(str(s) for s in seasons) if seasons else None,
    )


def discover_seasons(data_dir: Path) -> list[str]:
    return sorted(p.stem for p in Path(data_dir).glob("*.csv"))


def load_experiment_data(
    config: ExperimentConfig,
) -> tuple[Schema, list[SeasonDataset], SeasonDataset]:
    """Load schema plus all seasons and split off the target stream."""
    schema = load_schema(config.schema_path)
    season_ids = list(config.seasons) if config.seasons else discover_seasons(config.data_dir)
    if not season_ids:
        raise ConfigError(f"no season CSVs found under {config.data_dir}")
    if config.target_season not in season_ids:
        raise ConfigError(
            f"target season {config.target_season!r} not among seasons {season_ids}"
        )
    datasets = []
    for sid in season_ids:
        path = Path(config.data_dir) / f"{sid}.csv"
        if not path.exists():
            raise ConfigError(f"season {sid!r}: file {path} is missing")
        datasets.append(load_season_csv(path, schema, sid))
    sources, target = split_by_season(datasets, config.target_season)
    if not sources:
        raise ConfigError("experiment needs at least one source season")
    return schema, sources, target


@dataclass
class MethodRun:
    """Records and (for the adaptive method) weight trajectory of one method."""

    name: str
    records: list[EvalRecord]
    trajectory: list[EnsembleState] = field(default_factory=list)


def build_method(
    kind: str,
    schema: Schema,
    sources: Sequence[SeasonDataset],
    pooled: NaiveBayesModel,
    smoothing: float,
) -> tuple[WeightStrategy, NaiveBayesModel | None]:
    """Strategy plus a fresh target-model copy for one method kind.

    Every method gets its own model instance so concurrent or sequential
    runs cannot contaminate each other.
    """
    n = len(sources)
    if kind == "pretrained_pooled":
        return WeightStrategy.single(updates_target=False), pooled.copy()
    if kind == "online":
        return WeightStrategy.single(updates_target=True), NaiveBayesModel(schema, smoothing)
    if kind == "online_pretrained":
        return WeightStrategy.single(updates_target=True), pooled.copy()
    if kind == "equal":
        return WeightStrategy.equal(), None
    if kind == "volume":
        return WeightStrategy.volume([len(s) for s in sources]), None
    if kind == "time":
        # Chronological source order: the last source is one season away.
        return WeightStrategy.time([n - i for i in range(n)]), None
    if kind == "msaw":
        return WeightStrategy.msaw(), NaiveBayesModel(schema, smoothing)
    raise ConfigError(f"unknown method kind {kind!r}")


def run_methods(
    schema: Schema,
    sources: Sequence[SeasonDataset],
    target: SeasonDataset,
    config: ExperimentConfig,
) -> tuple[list[MetricReport], dict[str, MethodRun]]:
    """Train per-season and pooled models, then run every configured method.

    Reports come back in config order; when the adaptive method is present
    every other method carries a DeLong comparison against it.
    """
    if target.n_pos == 0 or target.n_neg == 0:
        raise ValueError(
            f"target season {target.season_id} has a single class "
            f"({target.n_pos} positives, {target.n_neg} negatives)"
        )
    source_models = [fit_batch(schema, s, config.smoothing) for s in sources]
    pooled = fit_pooled(schema, sources, config.smoothing)

    runs: dict[str, MethodRun] = {}
    for kind in config.methods:
        strategy, target_model = build_method(
            kind, schema, sources, pooled, config.smoothing
        )
        records, trajectory = run_stream(
            source_models,
            target_model,
            target,
            strategy,
            config=config.msaw,
            snapshot_stride=config.snapshot_stride,
        )
        runs[kind] = MethodRun(name=kind, records=records, trajectory=trajectory)

    named = [(kind, runs[kind].records) for kind in config.methods]
    if "msaw" in config.methods:
        reports = compare_methods(named, reference="msaw")
    else:
        reports = []
        for kind, records in named:
            reports.append(
                MetricReport(
                    method_name=kind,
                    auroc=auroc(records),
                    n_pos=sum(1 for r in records if r.label),
                    n_neg=sum(1 for r in records if not r.label),
                )
            )
    return reports, runs


def season_reports(
    schema: Schema,
    sources: Sequence[SeasonDataset],
    target: SeasonDataset,
    smoothing: float = 1.0,
) -> list[MetricReport]:
    """Static per-season evaluation: each source model scored on the target."""
    reports = []
    for season in sources:
        model = fit_batch(schema, season, smoothing)
        reports.append(evaluate_static(model, target, name=season.season_id))
    return reports
