"""Scoring-run evaluation: exact AUROC, DeLong's paired test, method reports.

AUROC is the Mann-Whitney statistic (ties credited one half), computed from
rank sums so it matches the brute-force pairwise count exactly. DeLong's
test compares two correlated AUROCs obtained on the same instances via the
placement-value construction, with two-sided normal p-values.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .data_model import SchemaError, SeasonDataset
from .naive_bayes import NaiveBayesModel


class EvalRecord(NamedTuple):
    """One prequential prediction: stream position, score, true label."""

    ordinal: int
    score: float
    label: bool


@dataclass
class MetricReport:
    """Aggregate metrics for one method on one evaluation stream."""

    method_name: str
    auroc: float
    n_pos: int
    n_neg: int
    delong_vs: dict[str, tuple[float, float]] = field(default_factory=dict)


def _scores_labels(records: Sequence[EvalRecord]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.fromiter((r.score for r in records), dtype=np.float64, count=len(records))
    labels = np.fromiter((r.label for r in records), dtype=bool, count=len(records))
    return scores, labels


def auroc(records: Sequence[EvalRecord]) -> float:
    """Probability a random positive outscores a random negative (ties half).

    Computed via rank sums in O(n log n); equals the all-pairs count exactly.
    Raises ``ValueError`` when only one class is present.
    """
    scores, labels = _scores_labels(records)
    return auroc_scores(scores, labels)


def auroc_scores(scores: np.ndarray, labels: np.ndarray) -> float:
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"AUROC needs both classes; got {n_pos} positives, {n_neg} negatives"
        )
    ranks = rankdata(scores, method="average")
    rank_sum_pos = float(ranks[labels].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _placements(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-positive and per-negative placement values (classic construction)."""
    pos = scores[labels]
    neg = scores[~labels]
    psi = (pos[:, None] > neg[None, :]).astype(np.float64)
    psi += 0.5 * (pos[:, None] == neg[None, :])
    return psi.mean(axis=1), psi.mean(axis=0)


def _check_paired(a: Sequence[EvalRecord], b: Sequence[EvalRecord]) -> None:
    if len(a) != len(b):
        raise ValueError(f"record lists are unpaired: lengths {len(a)} vs {len(b)}")
    for ra, rb in zip(a, b):
        if ra.ordinal != rb.ordinal or ra.label != rb.label:
            raise ValueError(
                f"record lists are unpaired at ordinal {ra.ordinal}: "
                f"({ra.ordinal}, {ra.label}) vs ({rb.ordinal}, {rb.label})"
            )


def delong_test(a: Sequence[EvalRecord], b: Sequence[EvalRecord]) -> tuple[float, float]:
    """DeLong's paired test for the difference of two correlated AUROCs.

    Both record lists must score the same instances in the same order.
    Returns (z, two-sided p). A zero-variance difference yields z=0, p=1
    when the AUROCs agree, and a signed infinite z with p=0 otherwise.
    """
    _check_paired(a, b)
    scores_a, labels = _scores_labels(a)
    scores_b, _ = _scores_labels(b)
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError(
            f"DeLong test needs both classes; got {n_pos} positives, {n_neg} negatives"
        )

    v10_a, v01_a = _placements(scores_a, labels)
    v10_b, v01_b = _placements(scores_b, labels)
    auc_a = float(v10_a.mean())
    auc_b = float(v10_b.mean())
    delta = auc_a - auc_b

    # Variance of the AUROC difference from the structural components; with a
    # single positive (or negative) that component is not estimable and
    # contributes zero.
    var = 0.0
    if n_pos > 1:
        s10 = np.cov(np.vstack([v10_a, v10_b]), ddof=1)
        var += (s10[0, 0] + s10[1, 1] - 2.0 * s10[0, 1]) / n_pos
    if n_neg > 1:
        s01 = np.cov(np.vstack([v01_a, v01_b]), ddof=1)
        var += (s01[0, 0] + s01[1, 1] - 2.0 * s01[0, 1]) / n_neg

    if var <= 0.0:
        if delta == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, delta), 0.0
    z = delta / math.sqrt(var)
    p = float(2.0 * norm.sf(abs(z)))
    return z, p


def evaluate_static(
    model: NaiveBayesModel, test: SeasonDataset, name: str = "static"
) -> MetricReport:
    """Score a frozen model over a whole season and report its AUROC."""
    if test.schema != model.schema:
        raise SchemaError(f"season {test.season_id} does not share the model schema")
    if test.n_pos == 0 or test.n_neg == 0:
        raise ValueError(
            f"season {test.season_id} has a single class "
            f"({test.n_pos} positives, {test.n_neg} negatives)"
        )
    scores = model.predict_proba_batch(test)
    return MetricReport(
        method_name=name,
        auroc=auroc_scores(scores, test.labels),
        n_pos=test.n_pos,
        n_neg=test.n_neg,
    )


def compare_methods(
    named_records: Sequence[tuple[str, Sequence[EvalRecord]]],
    reference: str = "msaw",
) -> list[MetricReport]:
    """Build one report per method, each tested against the reference method.

    All record lists must be paired on the same stream. The reference
    method's own report carries no comparisons.
    """
    names = [name for name, _ in named_records]
    if reference not in names:
        raise ValueError(f"reference method {reference!r} absent from {names}")
    ref_records = dict(named_records)[reference]
    for name, records in named_records:
        _check_paired(ref_records, records)

    reports = []
    for name, records in named_records:
        scores, labels = _scores_labels(records)
        report = MetricReport(
            method_name=name,
            auroc=auroc_scores(scores, labels),
            n_pos=int(labels.sum()),
            n_neg=int(labels.size - labels.sum()),
        )
        if name != reference:
            report.delong_vs[reference] = delong_test(records, ref_records)
        reports.append(report)
    return reports


# -- exports ----------------------------------------------------------------


def report_to_dict(report: MetricReport) -> dict:
    return {
        "method": report.method_name,
        "auroc": report.auroc,
        "n_pos": report.n_pos,
        "n_neg": report.n_neg,
        "delong_vs": {
            other: {"z": z, "p": p} for other, (z, p) in report.delong_vs.items()
        },
    }


def write_metrics_json(reports: Sequence[MetricReport], path: str | Path) -> None:
    payload = [report_to_dict(r) for r in reports]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_metrics_csv(
    reports: Sequence[MetricReport], path: str | Path, reference: str = "msaw"
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "auroc", "n_pos", "n_neg", "z_vs_msaw", "p_vs_msaw"])
        for r in reports:
            z, p = r.delong_vs.get(reference, (None, None))
            writer.writerow(
                [
                    r.method_name,
                    repr(r.auroc),
                    r.n_pos,
                    r.n_neg,
                    "" if z is None else repr(z),
                    "" if p is None else repr(p),
                ]
            )


def write_records_csv(records: Sequence[EvalRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ordinal", "score", "label"])
        for r in records:
            writer.writerow([r.ordinal, repr(r.score), int(r.label)])
