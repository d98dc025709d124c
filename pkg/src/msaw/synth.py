"""Seeded generator of multi-season categorical streams with seasonal drift.

Stands in for multi-year clinical registries at desk scale: rare positives,
one stream per season, and class-conditional feature distributions that
drift a fixed total-variation step from one season to the next. An optional
"outlier season" copies the target season's distributions into one early
season, so that an old model unexpectedly transfers well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import Feature, Schema, SeasonDataset

PRESENT_NEGATED_MISSING = ("P", "N", "M")


@dataclass(frozen=True)
class DriftSpec:
    """Parameters of one synthetic multi-season benchmark.

    ``drift_rate`` is the per-season total-variation step applied to every
    class-conditional category distribution; drift moves along a fixed
    random direction per (feature, class), so older seasons lie farther
    from the target. ``class_separation`` is the per-feature total-variation
    distance between positive- and negative-class conditionals in the first
    season, i.e. how much signal each feature carries before drift.
    ``outlier_season`` (0-based source index) makes that season sample from
    the target's distributions instead.
    """

    n_features: int = 30
    alphabet_size: int = 3
    n_sources: int = 8
    instances_per_season: int = 20_000
    prevalence: float = 0.002
    drift_rate: float = 0.03
    class_separation: float = 0.20
    seed: int = 7
    outlier_season: int | None = None
    start_year: int = 2011

    def __post_init__(self) -> None:
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if self.n_sources < 1:
            raise ValueError("n_sources must be >= 1")
        if self.instances_per_season < 1:
            raise ValueError("instances_per_season must be >= 1")
        if not 0.0 < self.prevalence < 1.0:
            raise ValueError(f"prevalence must be in (0,1), got {self.prevalence}")
        if self.drift_rate < 0.0:
            raise ValueError("drift_rate must be >= 0")
        if self.class_separation < 0.0:
            raise ValueError("class_separation must be >= 0")
        if self.outlier_season is not None and not (
            0 <= self.outlier_season < self.n_sources
        ):
            raise ValueError(
                f"outlier_season must be in [0, {self.n_sources}), "
                f"got {self.outlier_season}"
            )

    @property
    def season_ids(self) -> tuple[str, ...]:
        return tuple(
            f"{self.start_year + k}-{self.start_year + k + 1}"
            for k in range(self.n_sources + 1)
        )


def _make_schema(spec: DriftSpec) -> Schema:
    if spec.alphabet_size == 3:
        alphabet = PRESENT_NEGATED_MISSING
    else:
        alphabet = tuple(f"v{i}" for i in range(spec.alphabet_size - 1)) + ("M",)
    features = tuple(
        Feature(name=f"f{i:03d}", alphabet=alphabet) for i in range(spec.n_features)
    )
    return Schema(features=features, label_name="label", positive_label="1")


def _steps_toward(
    base: np.ndarray, toward: np.ndarray, tv_steps: np.ndarray
) -> np.ndarray:
    """Move each distribution a given total-variation distance along a ray.

    ``tv_steps`` broadcasts against ``base`` minus its last axis; the walk is
    capped at the largest multiple keeping every component nonnegative, and
    the result is renormalized to absorb rounding.
    """
    delta = toward - base
    tv_unit = np.abs(delta).sum(axis=-1) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(tv_unit > 0, tv_steps / tv_unit, 0.0)
        ratios = np.where(delta < 0, base / np.where(delta < 0, -delta, 1.0), np.inf)
    s_max = ratios.min(axis=-1)
    s = np.minimum(scale, s_max)
    moved = base + s[..., None] * delta
    np.clip(moved, 0.0, None, out=moved)
    moved /= moved.sum(axis=-1, keepdims=True)
    return moved


def _season_distributions(spec: DriftSpec, rng: np.random.Generator) -> np.ndarray:
    """Class-conditional category distributions per season.

    Returns an array of shape (n_seasons, 2, n_features, alphabet_size)
    where axis 1 indexes the class (0 = negative, 1 = positive). The
    positive-class conditionals start ``class_separation`` away from the
    negative-class ones; season k then sits k * drift_rate away (in total
    variation) from season 0 along a per-(class, feature) direction sampled
    once, so drift accumulates away from the oldest season.
    """
    n_seasons = spec.n_sources + 1
    alphabet_prior = np.ones(spec.alphabet_size)
    base_neg = rng.dirichlet(alphabet_prior, size=spec.n_features)
    sep_toward = rng.dirichlet(alphabet_prior, size=spec.n_features)
    base_pos = _steps_toward(
        base_neg, sep_toward, np.full(spec.n_features, spec.class_separation)
    )
    base = np.stack([base_neg, base_pos])

    toward = rng.dirichlet(alphabet_prior, size=(2, spec.n_features))
    dists = np.empty((n_seasons,) + base.shape)
    for k in range(n_seasons):
        dists[k] = _steps_toward(
            base, toward, np.full((2, spec.n_features), k * spec.drift_rate)
        )
    if spec.outlier_season is not None:
        dists[spec.outlier_season] = dists[-1]
    return dists


def generate(spec: DriftSpec) -> tuple[Schema, list[SeasonDataset]]:
    """Generate ``n_sources`` source seasons plus one target season.

    Fully deterministic for a given spec; labels are Bernoulli draws at the
    configured prevalence and feature values are drawn from that season's
    class-conditional distributions.
    """
    rng = np.random.default_rng(spec.seed)
    schema = _make_schema(spec)
    dists = _season_distributions(spec, rng)

    seasons: list[SeasonDataset] = []
    n = spec.instances_per_season
    for k, season_id in enumerate(spec.season_ids):
        labels = rng.random(n) < spec.prevalence
        codes = np.empty((n, spec.n_features), dtype=np.int16)
        idx_by_class = (~labels, labels)
        for f in range(spec.n_features):
            for c in (0, 1):
                idx = idx_by_class[c]
                count = int(idx.sum())
                if count:
                    codes[idx, f] = rng.choice(
                        spec.alphabet_size, size=count, p=dists[k, c, f]
                    )
        role = "target" if k == spec.n_sources else "source"
        seasons.append(
            SeasonDataset(
                season_id=season_id,
                schema=schema,
                codes=codes,
                labels=labels,
                role=role,
            )
        )
    return schema, seasons
