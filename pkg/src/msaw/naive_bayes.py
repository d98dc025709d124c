"""Incremental categorical Naive Bayes with additive smoothing.

The model is a pile of exact integer counts: per-class totals and
per-(feature, category, class) tallies. Batch fitting and instance-at-a-time
updates produce identical counts, so a model can be pre-trained on past
seasons and then continue learning on a live stream. Scoring applies
additive (Laplace) smoothing to both priors and conditionals and accumulates
per-feature terms in log space, which keeps wide schemas away from underflow
and guarantees a well-defined posterior even for never-seen categories.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .data_model import DataError, Instance, Schema, SchemaError, SeasonDataset


class FeatureStat(NamedTuple):
    """Smoothed per-(feature, category) class-conditional statistics."""

    feature: str
    category: str
    p_given_pos: float
    p_given_neg: float
    log10_lr: float


class NaiveBayesModel:
    """Two-class categorical Naive Bayes over a fixed schema.

    Counts only ever grow; ``update`` mutates in place and is single-writer,
    while scoring is read-only and safe to share once updates stop.
    """

    __slots__ = ("schema", "smoothing", "class_counts", "value_counts")

    def __init__(self, schema: Schema, smoothing: float = 1.0):
        if smoothing <= 0:
            raise ValueError(f"smoothing must be positive, got {smoothing}")
        self.schema = schema
        self.smoothing = float(smoothing)
        max_alpha = int(schema.alphabet_sizes.max()) if schema.n_features else 0
        self.class_counts = np.zeros(2, dtype=np.int64)
        self.value_counts = np.zeros(
            (schema.n_features, max_alpha, 2), dtype=np.int64
        )

    # -- training ----------------------------------------------------------

    def update(self, x: Instance) -> "NaiveBayesModel":
        """Fold one labeled instance into the counts; returns self."""
        if x.label is None:
            raise DataError(f"instance {x.ordinal} is unlabeled; cannot update")
        return self.update_encoded(self.schema.encode_values(x.values), bool(x.label))

    def update_encoded(self, codes: np.ndarray, label: bool) -> "NaiveBayesModel":
        """Array fast path of :meth:`update` for already-encoded rows."""
        c = int(label)
        self.class_counts[c] += 1
        self.value_counts[np.arange(self.schema.n_features), codes, c] += 1
        return self

    def _absorb_arrays(self, codes: np.ndarray, labels: np.ndarray) -> None:
        max_alpha = self.value_counts.shape[1]
        offsets = np.arange(self.schema.n_features, dtype=np.int64) * max_alpha
        for c in (0, 1):
            rows = codes[labels == bool(c)]
            self.class_counts[c] += rows.shape[0]
            if rows.shape[0]:
                flat = (rows.astype(np.int64) + offsets[None, :]).ravel()
                tally = np.bincount(flat, minlength=self.schema.n_features * max_alpha)
                self.value_counts[:, :, c] += tally.reshape(-1, max_alpha)

    # -- scoring -----------------------------------------------------------

    def _log_priors(self) -> np.ndarray:
        s = self.smoothing
        n = self.class_counts.sum()
        return np.log((self.class_counts + s) / (n + 2.0 * s))

    def _log_cond_table(self) -> np.ndarray:
        """Smoothed log P(feature=value | class), shape (F, A_max, 2)."""
        s = self.smoothing
        sizes = self.schema.alphabet_sizes.astype(np.float64)
        denom = self.class_counts[None, None, :] + s * sizes[:, None, None]
        return np.log((self.value_counts + s) / denom)

    def predict_proba(self, x: Instance) -> float:
        """Posterior probability of the positive class; label is ignored."""
        codes = self.schema.encode_values(x.values)
        return float(self.predict_proba_codes(codes))

    def predict_proba_codes(self, codes: np.ndarray) -> np.ndarray | float:
        """Positive-class posterior for one encoded row or a row matrix."""
        codes = np.asarray(codes)
        single = codes.ndim == 1
        rows = codes[None, :] if single else codes
        table = self._log_cond_table()
        gather = table[np.arange(self.schema.n_features)[None, :], rows, :]
        log_joint = gather.sum(axis=1) + self._log_priors()[None, :]
        # Sigmoid of the log-odds: stable at both tails and exactly 0.5 for
        # a fully symmetric (e.g. zero-count) model.
        odds = log_joint[:, 0] - log_joint[:, 1]
        p_pos = np.empty(odds.shape)
        hi = odds > 0
        e = np.exp(-odds[hi])
        p_pos[hi] = e / (1.0 + e)
        p_pos[~hi] = 1.0 / (1.0 + np.exp(odds[~hi]))
        return float(p_pos[0]) if single else p_pos

    def predict_proba_batch(self, dataset: SeasonDataset) -> np.ndarray:
        if dataset.schema != self.schema:
            raise SchemaError(
                f"season {dataset.season_id} does not share the model schema"
            )
        return self.predict_proba_codes(dataset.codes)

    # -- reporting ---------------------------------------------------------

    def feature_report(
        self,
        category_filter: str | None = None,
        min_p_pos: float = 0.0,
    ) -> list[FeatureStat]:
        """Per-(feature, category) smoothed conditionals, sorted by log10 LR.

        Requires at least one training instance per class. Only rows with
        ``p_given_pos >= min_p_pos`` (and, when set, the given category) are
        emitted, most positively-associated first.
        """
        if int(self.class_counts.min()) == 0:
            raise DataError(
                "feature report requires at least one instance of each class; "
                f"class counts are {self.class_counts.tolist()}"
            )
        s = self.smoothing
        stats: list[FeatureStat] = []
        for i, feat in enumerate(self.schema.features):
            a_size = len(feat.alphabet)
            for a, category in enumerate(feat.alphabet):
                if category_filter is not None and category != category_filter:
                    continue
                p_pos = (self.value_counts[i, a, 1] + s) / (
                    self.class_counts[1] + s * a_size
                )
                if p_pos < min_p_pos:
                    continue
                p_neg = (self.value_counts[i, a, 0] + s) / (
                    self.class_counts[0] + s * a_size
                )
                stats.append(
                    FeatureStat(
                        feature=feat.name,
                        category=category,
                        p_given_pos=float(p_pos),
                        p_given_neg=float(p_neg),
                        log10_lr=math.log10(p_pos / p_neg),
                    )
                )
        stats.sort(key=lambda st: (-st.log10_lr, st.feature, st.category))
        return stats

    # -- plumbing ----------------------------------------------------------

    def copy(self) -> "NaiveBayesModel":
        clone = NaiveBayesModel(self.schema, self.smoothing)
        clone.class_counts = self.class_counts.copy()
        clone.value_counts = self.value_counts.copy()
        return clone

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NaiveBayesModel):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.smoothing == other.smoothing
            and np.array_equal(self.class_counts, other.class_counts)
            and np.array_equal(self.value_counts, other.value_counts)
        )

    def to_json_dict(self) -> dict:
        nz = np.argwhere(self.value_counts > 0)
        entries = [
            [int(f), int(a), int(c), int(self.value_counts[f, a, c])]
            for f, a, c in nz
        ]
        return {
            "schema": self.schema.to_json_dict(),
            "smoothing": self.smoothing,
            "class_counts": self.class_counts.tolist(),
            "value_counts": entries,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "NaiveBayesModel":
        schema = Schema.from_json_dict(obj["schema"])
        model = cls(schema, smoothing=float(obj["smoothing"]))
        model.class_counts[:] = obj["class_counts"]
        for f, a, c, count in obj["value_counts"]:
            model.value_counts[f, a, c] = count
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NaiveBayesModel":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_batch(
    schema: Schema,
    data: SeasonDataset | Iterable[Instance],
    smoothing: float = 1.0,
) -> NaiveBayesModel:
    """Fit a model by exact tallying; empty data yields the zero-count model."""
    model = NaiveBayesModel(schema, smoothing=smoothing)
    if isinstance(data, SeasonDataset):
        if data.schema != schema:
            raise SchemaError(f"season {data.season_id} does not match the schema")
        model._absorb_arrays(data.codes, data.labels)
        return model
    instances = list(data)
    if not instances:
        return model
    codes = np.empty((len(instances), schema.n_features), dtype=np.int16)
    labels = np.empty(len(instances), dtype=bool)
    for i, inst in enumerate(instances):
        if inst.label is None:
            raise DataError(f"instance {inst.ordinal} is unlabeled; cannot fit")
        codes[i] = schema.encode_values(inst.values)
        labels[i] = inst.label
    model._absorb_arrays(codes, labels)
    return model


def fit_pooled(
    schema: Schema,
    seasons: Sequence[SeasonDataset],
    smoothing: float = 1.0,
) -> NaiveBayesModel:
    """Fit one model on the concatenation of several seasons."""
    model = NaiveBayesModel(schema, smoothing=smoothing)
    for season in seasons:
        if season.schema != schema:
            raise SchemaError(f"season {season.season_id} does not match the schema")
        model._absorb_arrays(season.codes, season.labels)
    return model
