"""Multi-source ensembles over a prequential stream.

The adaptive strategy ("msaw") maintains one weight per pre-trained source
model plus one for the online target model. Each step, in order: the stream
index advances; the target weight is multiplied by beta * j (volume
amplification); all weights are normalized onto the simplex; the combined
probability is emitted; then every model whose thresholded score disagrees
with the true label has its weight multiplied by sqrt(j) / (sqrt(j) + alpha).
The emitted probability therefore never sees the current step's penalties.

Weights are kept in linear form together with a log-domain shadow. The
beta * j factor compounds multiplicatively, so over long streams the ratio
between target and source weights can traverse thousands of orders of
magnitude; linear float64 entries then flush to zero while the log shadow
preserves the exact ratio structure (weights never mathematically reach
zero). Linear values stay authoritative for combination and export, the log
shadow for positivity diagnostics.

Static strategies ("equal", "volume", "time") combine the source models with
a fixed simplex and involve no target model; "none" passes a single model
through, optionally updating it after each prediction (test-then-train).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data_model import SchemaError, SeasonDataset
from .evaluation import EvalRecord
from .naive_bayes import NaiveBayesModel

STRATEGY_KINDS = ("msaw", "equal", "volume", "time", "none")


@dataclass(frozen=True)
class MsawConfig:
    """Hyperparameters of the adaptive weighting step.

    ``alpha`` (> 1) controls how sharply a misclassifying model's weight
    shrinks; ``beta`` (in (0,1)) scales the target weight by beta * j each
    step so the online model is suppressed until the stream index approaches
    1/beta. Scores are thresholded at ``decision_threshold`` to decide
    whether a model classified an instance incorrectly (strictly-greater
    means a positive prediction).
    """

    alpha: float = math.log2(10)
    beta: float = 1.0 / 200_000.0
    decision_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError(
                f"decision_threshold must be in (0,1), got {self.decision_threshold}"
            )


@dataclass(frozen=True)
class EnsembleState:
    """Weights and stream position of one adaptive run.

    ``source_weights`` / ``target_weight`` are the linear post-penalty
    weights carried into the next step's normalization; the ``log_*`` fields
    shadow them in log domain. ``normalized_weights`` (sources first, target
    last) records the post-normalization simplex of the step that produced
    this state; it is ``None`` on the initial state.
    """

    source_weights: np.ndarray
    target_weight: float
    log_source_weights: np.ndarray
    log_target_weight: float
    stream_index: int
    config: MsawConfig
    normalized_weights: np.ndarray | None = None
    normalized_log_weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.source_weights, dtype=np.float64)
        logs = np.asarray(self.log_source_weights, dtype=np.float64)
        if np.isnan(w).any() or math.isnan(self.target_weight):
            raise ValueError("ensemble weights must not be NaN")
        if (w < 0).any() or self.target_weight < 0:
            raise ValueError("ensemble weights must be nonnegative")
        if self.stream_index < 0:
            raise ValueError("stream index must be nonnegative")
        no_linear_mass = not (w > 0).any() and self.target_weight == 0.0
        no_log_mass = not np.isfinite(logs).any() and not math.isfinite(
            self.log_target_weight
        )
        if no_linear_mass and no_log_mass:
            raise ValueError("at least one ensemble weight must be positive")
        w.setflags(write=False)
        logs.setflags(write=False)
        object.__setattr__(self, "source_weights", w)
        object.__setattr__(self, "log_source_weights", logs)

    @classmethod
    def initial(cls, n_sources: int, config: MsawConfig) -> "EnsembleState":
        if n_sources < 1:
            raise ValueError("an adaptive ensemble needs at least one source model")
        return cls(
            source_weights=np.ones(n_sources),
            target_weight=1.0,
            log_source_weights=np.zeros(n_sources),
            log_target_weight=0.0,
            stream_index=0,
            config=config,
        )

    @property
    def n_sources(self) -> int:
        return int(self.source_weights.shape[0])


@dataclass(frozen=True)
class WeightStrategy:
    """How the ensemble combines model scores over the stream.

    ``volume`` weights sources by training-set size, ``time`` by the inverse
    number of seasons separating a source from the target season (the most
    recent source has distance 1). ``none`` runs the target model alone,
    updating it after each prediction when ``updates_target`` is set.
    """

    kind: str
    sizes: tuple[float, ...] | None = None
    distances: tuple[float, ...] | None = None
    updates_target: bool = False

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(
                f"unknown strategy kind {self.kind!r}; expected one of {STRATEGY_KINDS}"
            )
        if self.kind == "volume" and not self.sizes:
            raise ValueError("volume strategy requires source sizes")
        if self.kind == "time" and not self.distances:
            raise ValueError("time strategy requires season distances")

    @classmethod
    def msaw(cls) -> "WeightStrategy":
        return cls(kind="msaw", updates_target=True)

    @classmethod
    def equal(cls) -> "WeightStrategy":
        return cls(kind="equal")

    @classmethod
    def volume(cls, sizes: Sequence[float]) -> "WeightStrategy":
        return cls(kind="volume", sizes=tuple(float(s) for s in sizes))

    @classmethod
    def time(cls, distances: Sequence[float]) -> "WeightStrategy":
        return cls(kind="time", distances=tuple(float(d) for d in distances))

    @classmethod
    def single(cls, updates_target: bool) -> "WeightStrategy":
        return cls(kind="none", updates_target=updates_target)


def penalty_factor(j: int, alpha: float) -> float:
    """Weight shrink factor sqrt(j) / (sqrt(j) + alpha), in (0,1).

    Strictly increasing in the stream index j, approaching 1 on long
    streams: late mistakes cost less than early ones.
    """
    if j < 1:
        raise ValueError(f"stream index must be >= 1, got {j}")
    if not alpha > 1.0:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    root = math.sqrt(j)
    return root / (root + alpha)


def _check_scores(source_scores: np.ndarray, target_score: float, n: int) -> np.ndarray:
    scores = np.asarray(source_scores, dtype=np.float64)
    if scores.shape != (n,):
        raise ValueError(
            f"expected {n} source scores, got shape {scores.shape}"
        )
    if (scores < 0).any() or (scores > 1).any():
        raise ValueError("source scores must lie in [0, 1]")
    if not 0.0 <= target_score <= 1.0:
        raise ValueError(f"target score must lie in [0, 1], got {target_score}")
    return scores


def combine(
    source_scores: Sequence[float], target_score: float, state: EnsembleState
) -> float:
    """Weighted sum of model scores under the state's current weights."""
    scores = _check_scores(np.asarray(source_scores), target_score, state.n_sources)
    return float(state.source_weights @ scores + state.target_weight * target_score)


def msaw_step(
    state: EnsembleState,
    source_scores: Sequence[float],
    target_score: float,
    true_label: bool,
) -> tuple[float, EnsembleState]:
    """One adaptive step: amplify, normalize, combine, then penalize.

    Returns the combined probability (computed from the freshly normalized
    weights, before any penalty) and the post-penalty state whose
    ``normalized_weights`` field records this step's simplex.
    """
    n = state.n_sources
    scores = _check_scores(np.asarray(source_scores), target_score, n)
    cfg = state.config

    j = state.stream_index + 1
    w_s = np.asarray(state.source_weights, dtype=np.float64)
    w_t = state.target_weight * cfg.beta * j
    lw_s = np.asarray(state.log_source_weights, dtype=np.float64)
    lw_t = state.log_target_weight + math.log(cfg.beta) + math.log(j)

    total = float(w_s.sum() + w_t)
    all_logs = np.append(lw_s, lw_t)
    peak = float(all_logs.max())
    log_total = peak + math.log(float(np.exp(all_logs - peak).sum()))
    if math.isfinite(total) and total > 0.0:
        norm_s = w_s / total
        norm_t = w_t / total
    else:
        # Linear scale degenerated; rebuild the simplex from the log shadow.
        rebuilt = np.exp(all_logs - peak)
        rebuilt /= rebuilt.sum()
        norm_s, norm_t = rebuilt[:n], float(rebuilt[n])
    nlog_s = lw_s - log_total
    nlog_t = lw_t - log_total

    prob = float(norm_s @ scores + norm_t * target_score)

    factor = penalty_factor(j, cfg.alpha)
    log_factor = math.log(factor)
    thr = cfg.decision_threshold
    wrong_sources = (scores > thr) != bool(true_label)
    post_s = np.where(wrong_sources, norm_s * factor, norm_s)
    post_log_s = np.where(wrong_sources, nlog_s + log_factor, nlog_s)
    post_t, post_log_t = norm_t, nlog_t
    if (target_score > thr) != bool(true_label):
        post_t = norm_t * factor
        post_log_t = nlog_t + log_factor

    new_state = EnsembleState(
        source_weights=post_s,
        target_weight=float(post_t),
        log_source_weights=post_log_s,
        log_target_weight=float(post_log_t),
        stream_index=j,
        config=cfg,
        normalized_weights=np.append(norm_s, norm_t),
        normalized_log_weights=np.append(nlog_s, nlog_t),
    )
    return prob, new_state


def static_weights(strategy: WeightStrategy, n: int) -> np.ndarray:
    """Fixed simplex weights for the non-adaptive ensemble strategies."""
    if n < 1:
        raise ValueError("static weighting needs at least one source model")
    if strategy.kind == "equal":
        return np.full(n, 1.0 / n)
    if strategy.kind == "volume":
        sizes = np.asarray(strategy.sizes, dtype=np.float64)
        if sizes.shape != (n,):
            raise ValueError(f"expected {n} sizes, got {sizes.shape}")
        if (sizes < 0).any() or sizes.sum() == 0.0:
            raise ValueError("volume weighting needs nonnegative sizes with a positive total")
        return sizes / sizes.sum()
    if strategy.kind == "time":
        distances = np.asarray(strategy.distances, dtype=np.float64)
        if distances.shape != (n,):
            raise ValueError(f"expected {n} distances, got {distances.shape}")
        if (distances <= 0).any():
            raise ValueError("season distances must be >= 1 (zero distance is invalid)")
        inv = 1.0 / distances
        return inv / inv.sum()
    raise ValueError(f"strategy {strategy.kind!r} has no static weights")


def run_stream(
    sources: Sequence[NaiveBayesModel],
    target_model: NaiveBayesModel | None,
    stream: SeasonDataset,
    strategy: WeightStrategy,
    config: MsawConfig | None = None,
    snapshot_stride: int = 1000,
) -> tuple[list[EvalRecord], list[EnsembleState]]:
    """Prequential pass over one season: score, record, then maybe train.

    Source models are never modified and may be shared by concurrent runs;
    a single run is inherently sequential (the weight state and the target
    model form a chain). For the adaptive strategy the state is snapshotted
    at the first step, every ``snapshot_stride`` steps, and the final step;
    static and single-model runs return an empty trajectory.
    """
    if len(stream) == 0:
        raise ValueError(f"season {stream.season_id} is empty")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    for m in sources:
        if m.schema != stream.schema:
            raise SchemaError("source model schema does not match the stream")

    if strategy.kind == "none":
        if target_model is None:
            raise ValueError("single-model strategy requires a model")
        if target_model.schema != stream.schema:
            raise SchemaError("model schema does not match the stream")
        if not strategy.updates_target:
            scores = target_model.predict_proba_codes(stream.codes)
            records = [
                EvalRecord(i, float(scores[i]), bool(stream.labels[i]))
                for i in range(len(stream))
            ]
            return records, []
        records = []
        for i in range(len(stream)):
            row = stream.codes[i]
            label = bool(stream.labels[i])
            records.append(
                EvalRecord(i, float(target_model.predict_proba_codes(row)), label)
            )
            target_model.update_encoded(row, label)
        return records, []

    if not sources:
        raise ValueError(f"strategy {strategy.kind!r} requires source models")
    source_matrix = np.column_stack(
        [m.predict_proba_codes(stream.codes) for m in sources]
    )

    if strategy.kind in ("equal", "volume", "time"):
        weights = static_weights(strategy, len(sources))
        probs = source_matrix @ weights
        records = [
            EvalRecord(i, float(probs[i]), bool(stream.labels[i]))
            for i in range(len(stream))
        ]
        return records, []

    # Adaptive strategy.
    if target_model is None:
        raise ValueError("adaptive strategy requires a target model")
    if target_model.schema != stream.schema:
        raise SchemaError("target model schema does not match the stream")
    cfg = config if config is not None else MsawConfig()
    state = EnsembleState.initial(len(sources), cfg)
    records = []
    trajectory: list[EnsembleState] = []
    n = len(stream)
    for i in range(n):
        row = stream.codes[i]
        label = bool(stream.labels[i])
        target_score = float(target_model.predict_proba_codes(row))
        prob, state = msaw_step(state, source_matrix[i], target_score, label)
        records.append(EvalRecord(i, prob, label))
        j = state.stream_index
        if j == 1 or j % snapshot_stride == 0 or j == n:
            if not trajectory or trajectory[-1].stream_index != j:
                trajectory.append(state)
        target_model.update_encoded(row, label)
    return records, trajectory


def write_weight_trajectory(
    trajectory: Sequence[EnsembleState], path: str | Path
) -> None:
    """Post-normalization weight trajectory as CSV: step, w_S_1.., w_T."""
    if not trajectory:
        raise ValueError("empty trajectory")
    n = trajectory[0].n_sources
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"w_S_{i + 1}" for i in range(n)] + ["w_T"])
        for state in trajectory:
            weights = state.normalized_weights
            if weights is None:
                continue
            writer.writerow([state.stream_index] + [repr(float(w)) for w in weights])
