"""Categorical data model: feature schemas, instances, and season datasets.

A season is one ordered slice of a stream (e.g. "2018-2019"); every season in
an experiment shares a single schema so that models trained on different
seasons stay alphabet-compatible. Missing values are an explicit category
(default code ``"M"``) rather than being imputed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

DEFAULT_MISSING_CODE = "M"


class SchemaError(ValueError):
    """Raised when a schema definition is malformed."""


class DataError(ValueError):
    """Raised when data does not conform to its schema."""


@dataclass(frozen=True)
class Feature:
    """One categorical feature: a name and its closed set of category codes."""

    name: str
    alphabet: tuple[str, ...]


@dataclass(frozen=True)
class Schema:
    """Closed categorical schema shared by all seasons of an experiment.

    Invariants (enforced at construction): feature names are unique and
    non-empty, every alphabet holds at least two distinct codes, and the
    missing-value code is a member of every alphabet.
    """

    features: tuple[Feature, ...]
    label_name: str
    positive_label: str
    missing_code: str = DEFAULT_MISSING_CODE

    def __post_init__(self) -> None:
        if not self.label_name:
            raise SchemaError("label name must be non-empty")
        seen: set[str] = set()
        for feat in self.features:
            if not feat.name:
                raise SchemaError("feature names must be non-empty")
            if feat.name in seen:
                raise SchemaError(f"duplicate feature name {feat.name!r}")
            seen.add(feat.name)
            if len(set(feat.alphabet)) != len(feat.alphabet):
                raise SchemaError(
                    f"feature {feat.name!r}: alphabet has duplicate codes"
                )
            if len(feat.alphabet) < 2:
                raise SchemaError(
                    f"feature {feat.name!r}: alphabet needs at least 2 codes, "
                    f"got {list(feat.alphabet)}"
                )
            if self.missing_code not in feat.alphabet:
                raise SchemaError(
                    f"feature {feat.name!r}: alphabet must contain the "
                    f"missing code {self.missing_code!r}"
                )
        if self.label_name in seen:
            raise SchemaError(
                f"label column {self.label_name!r} collides with a feature name"
            )

    # -- derived lookups --------------------------------------------------

    @cached_property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @cached_property
    def n_features(self) -> int:
        return len(self.features)

    @cached_property
    def alphabet_sizes(self) -> np.ndarray:
        sizes = np.array([len(f.alphabet) for f in self.features], dtype=np.int64)
        sizes.setflags(write=False)
        return sizes

    @cached_property
    def _feature_pos(self) -> dict[str, int]:
        return {f.name: i for i, f in enumerate(self.features)}

    @cached_property
    def _code_maps(self) -> tuple[dict[str, int], ...]:
        return tuple({c: i for i, c in enumerate(f.alphabet)} for f in self.features)

    def feature(self, name: str) -> Feature:
        try:
            return self.features[self._feature_pos[name]]
        except KeyError:
            raise SchemaError(f"unknown feature {name!r}") from None

    # -- encoding ----------------------------------------------------------

    def encode_values(self, values: Mapping[str, str]) -> np.ndarray:
        """Encode a name->code mapping to integer codes in schema order.

        Features absent from the mapping are materialized as the missing
        code; unknown feature names or codes raise :class:`DataError`.
        """
        unknown = set(values) - set(self._feature_pos)
        if unknown:
            raise DataError(f"values name unknown features: {sorted(unknown)}")
        row = np.empty(self.n_features, dtype=np.int16)
        for i, feat in enumerate(self.features):
            code = values.get(feat.name, self.missing_code)
            try:
                row[i] = self._code_maps[i][code]
            except KeyError:
                raise DataError(
                    f"unknown code {code!r} for feature {feat.name!r}"
                ) from None
        return row

    def decode_row(self, row: Sequence[int]) -> dict[str, str]:
        return {
            feat.name: feat.alphabet[int(row[i])]
            for i, feat in enumerate(self.features)
        }

    # -- JSON persistence ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "label": self.label_name,
            "positive_label": self.positive_label,
            "missing_code": self.missing_code,
            "features": [
                {"name": f.name, "alphabet": list(f.alphabet)} for f in self.features
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "Schema":
        try:
            label = obj["label"]
            positive = obj["positive_label"]
            raw_features = obj["features"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"schema JSON missing required key: {exc}") from None
        missing = obj.get("missing_code", DEFAULT_MISSING_CODE)
        features = []
        for entry in raw_features:
            name = entry.get("name", "")
            alphabet = list(entry.get("alphabet", []))
            if not alphabet:
                raise SchemaError(f"feature {name!r}: empty alphabet")
            if missing not in alphabet:
                alphabet.append(missing)
            features.append(Feature(name=str(name), alphabet=tuple(alphabet)))
        return cls(
            features=tuple(features),
            label_name=str(label),
            positive_label=str(positive),
            missing_code=str(missing),
        )


def load_schema(path: str | Path) -> Schema:
    """Load and validate a schema JSON file.

    Alphabets that omit the missing code get it appended; structural
    violations (duplicate features, too-small alphabets) raise
    :class:`SchemaError` naming the offending feature.
    """
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return Schema.from_json_dict(obj)


def write_schema(schema: Schema, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schema.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )


@dataclass(frozen=True)
class Instance:
    """One labeled (or unlabeled) categorical observation in a stream.

    ``ordinal`` is the instance's position within its season's stream;
    ``label`` is True for the positive class, None when unlabeled.
    """

    values: Mapping[str, str]
    label: bool | None
    ordinal: int


def validate_instance(schema: Schema, instance: Instance) -> None:
    """Check that an instance carries exactly one in-alphabet value per feature."""
    if set(instance.values) != set(schema.feature_names):
        missing = set(schema.feature_names) - set(instance.values)
        extra = set(instance.values) - set(schema.feature_names)
        raise DataError(
            f"instance {instance.ordinal}: missing features {sorted(missing)}, "
            f"unknown features {sorted(extra)}"
        )
    schema.encode_values(instance.values)
    if instance.ordinal < 0:
        raise DataError(f"negative ordinal {instance.ordinal}")


@dataclass(frozen=True)
class SeasonDataset:
    """Ordered instances of one season, stored column-encoded for speed.

    ``codes`` is an (n_instances, n_features) int16 matrix of category
    indices; ``labels`` is a boolean vector. Both arrays are read-only:
    a loaded season never changes and may be shared across threads.
    """

    season_id: str
    schema: Schema
    codes: np.ndarray
    labels: np.ndarray
    role: str = "source"

    def __post_init__(self) -> None:
        if self.role not in ("source", "target"):
            raise DataError(f"role must be 'source' or 'target', got {self.role!r}")
        if self.codes.ndim != 2 or self.codes.shape[1] != self.schema.n_features:
            raise DataError(
                f"codes shape {self.codes.shape} does not match schema "
                f"({self.schema.n_features} features)"
            )
        if self.labels.shape != (self.codes.shape[0],):
            raise DataError("labels length does not match codes")
        self.codes.setflags(write=False)
        self.labels.setflags(write=False)

    @classmethod
    def from_instances(
        cls,
        schema: Schema,
        season_id: str,
        instances: Iterable[Instance],
        role: str = "source",
    ) -> "SeasonDataset":
        instances = list(instances)
        codes = np.empty((len(instances), schema.n_features), dtype=np.int16)
        labels = np.empty(len(instances), dtype=bool)
        for i, inst in enumerate(instances):
            if inst.ordinal != i:
                raise DataError(
                    f"instance ordinals must run 0..n-1 in order; "
                    f"position {i} has ordinal {inst.ordinal}"
                )
            if inst.label is None:
                raise DataError(f"instance {i} has no label")
            codes[i] = schema.encode_values(inst.values)
            labels[i] = inst.label
        return cls(season_id=season_id, schema=schema, codes=codes, labels=labels, role=role)

    def __len__(self) -> int:
        return int(self.codes.shape[0])

    def __getitem__(self, i: int) -> Instance:
        return Instance(
            values=self.schema.decode_row(self.codes[i]),
            label=bool(self.labels[i]),
            ordinal=i if i >= 0 else len(self) + i,
        )

    def __iter__(self) -> Iterator[Instance]:
        for i in range(len(self)):
            yield self[i]

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return len(self) - self.n_pos

    def with_role(self, role: str) -> "SeasonDataset":
        return replace(self, role=role)


def validate_dataset(dataset: SeasonDataset) -> None:
    """Validator pass: every stored row must decode to a valid instance."""
    sizes = dataset.schema.alphabet_sizes
    if dataset.codes.size and (
        dataset.codes.min() < 0 or (dataset.codes >= sizes[None, :]).any()
    ):
        bad = np.argwhere(
            (dataset.codes < 0) | (dataset.codes >= sizes[None, :])
        )[0]
        raise DataError(
            f"season {dataset.season_id}: row {bad[0]} column {bad[1]} "
            "holds an out-of-alphabet code"
        )
    for inst in dataset:
        validate_instance(dataset.schema, inst)


def load_season_csv(
    path: str | Path,
    schema: Schema,
    season_id: str,
    role: str = "source",
) -> SeasonDataset:
    """Load one season from CSV, preserving file row order as stream order.

    The header must contain the label column and only schema feature names
    otherwise; schema features without a column are filled with the missing
    code, as are empty cells. Unknown category codes are hard errors
    reported with row and column context.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise DataError(f"{path}: empty file, no header row") from None
    if len(set(header)) != len(header):
        dupes = sorted({c for c in header if header.count(c) > 1})
        raise DataError(f"{path}: duplicate header columns {dupes}")
    if schema.label_name not in header:
        raise DataError(f"{path}: header is missing label column {schema.label_name!r}")
    unknown_cols = set(header) - set(schema.feature_names) - {schema.label_name}
    if unknown_cols:
        raise DataError(
            f"{path}: header columns not in schema: {sorted(unknown_cols)}"
        )

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: malformed CSV: {exc}") from None

    n = len(df)
    labels_raw = df[schema.label_name]
    # Short rows surface as NaN in trailing columns; a missing label cell is
    # an error while missing feature cells become the missing code.
    bad_label = labels_raw.isna() | (labels_raw == "")
    if bad_label.any():
        row = int(np.flatnonzero(bad_label.to_numpy())[0])
        raise DataError(f"{path}: row {row}: missing label cell")
    labels = (labels_raw == schema.positive_label).to_numpy()

    codes = np.empty((n, schema.n_features), dtype=np.int16)
    for i, feat in enumerate(schema.features):
        if feat.name in df.columns:
            col = df[feat.name]
            col = col.where(~(col.isna() | (col == "")), schema.missing_code)
            encoded = pd.Categorical(col, categories=feat.alphabet).codes
            if (encoded < 0).any():
                row = int(np.flatnonzero(encoded < 0)[0])
                raise DataError(
                    f"{path}: row {row}: unknown code {col.iloc[row]!r} "
                    f"for feature {feat.name!r}"
                )
            codes[:, i] = encoded
        else:
            codes[:, i] = feat.alphabet.index(schema.missing_code)

    return SeasonDataset(
        season_id=season_id, schema=schema, codes=codes, labels=labels, role=role
    )


def write_season_csv(dataset: SeasonDataset, path: str | Path) -> None:
    """Write a season to CSV so that reloading reproduces it exactly."""
    schema = dataset.schema
    negative_out = "0" if schema.positive_label != "0" else "1"
    columns = {}
    for i, feat in enumerate(schema.features):
        alphabet = np.array(feat.alphabet, dtype=object)
        columns[feat.name] = alphabet[dataset.codes[:, i]]
    columns[schema.label_name] = np.where(
        dataset.labels, schema.positive_label, negative_out
    )
    pd.DataFrame(columns).to_csv(path, index=False)


def split_by_season(
    datasets: Sequence[SeasonDataset], target_id: str
) -> tuple[list[SeasonDataset], SeasonDataset]:
    """Split datasets into (sources, target) by season id.

    Source order is preserved; the target comes back tagged with the
    target role. Duplicate season ids or an absent target are errors.
    """
    ids = [d.season_id for d in datasets]
    if len(set(ids)) != len(ids):
        dupes = sorted({s for s in ids if ids.count(s) > 1})
        raise DataError(f"duplicate season ids: {dupes}")
    if target_id not in ids:
        raise DataError(f"target season {target_id!r} not found among {ids}")
    sources = [d.with_role("source") for d in datasets if d.season_id != target_id]
    target = next(d for d in datasets if d.season_id == target_id).with_role("target")
    return sources, target
