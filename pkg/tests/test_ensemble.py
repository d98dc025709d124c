import math

import numpy as np
import pytest

from msaw.data_model import Instance, SchemaError, SeasonDataset
from msaw.ensemble import (
    EnsembleState,
    MsawConfig,
    WeightStrategy,
    combine,
    msaw_step,
    penalty_factor,
    run_stream,
    static_weights,
    write_weight_trajectory,
)
from msaw.naive_bayes import NaiveBayesModel, fit_batch

from conftest import make_schema, manual_adaptive_run, random_season, tiny_stream


def state_with(weights, target_weight, config=None, j=0):
    w = np.asarray(weights, dtype=float)
    return EnsembleState(
        source_weights=w,
        target_weight=float(target_weight),
        log_source_weights=np.log(w) if (w > 0).all() else np.full(w.shape, -np.inf),
        log_target_weight=math.log(target_weight) if target_weight > 0 else -math.inf,
        stream_index=j,
        config=config or MsawConfig(),
    )


class TestMsawConfig:
    def test_defaults_match_published_constants(self):
        cfg = MsawConfig()
        assert cfg.alpha == math.log2(10)
        assert abs(cfg.alpha - 3.3219) < 1e-4
        assert cfg.beta == 1.0 / 200_000.0
        assert cfg.decision_threshold == 0.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"alpha": 1.0},
            {"alpha": 0.5},
            {"beta": 0.0},
            {"beta": 1.0},
            {"decision_threshold": 0.0},
            {"decision_threshold": 1.0},
        ],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ValueError):
            MsawConfig(**kwargs)


class TestPenaltyFactor:
    def test_spot_value_j1(self):
        assert abs(penalty_factor(1, math.log2(10)) - 0.2314) < 1e-3

    def test_spot_value_j10000(self):
        assert abs(penalty_factor(10_000, math.log2(10)) - 0.9678) < 1e-3

    def test_bounds_and_monotonic(self):
        alpha = math.log2(10)
        js = np.unique(
            np.concatenate(
                [np.arange(1, 1001), np.geomspace(1000, 1_000_000, 500).astype(int)]
            )
        )
        values = np.array([penalty_factor(int(j), alpha) for j in js])
        assert ((values > 0) & (values < 1)).all()
        assert (np.diff(values) > 0).all()

    def test_large_alpha_approaches_zero(self):
        assert penalty_factor(1, 1e12) < 1e-11

    def test_errors(self):
        with pytest.raises(ValueError):
            penalty_factor(0, 2.0)
        with pytest.raises(ValueError):
            penalty_factor(5, 1.0)


class TestCombine:
    def test_midpoint(self):
        state = state_with([0.5, 0.5], 0.0)
        assert combine([0.2, 0.8], 0.0, state) == 0.5

    def test_single_model_identity(self):
        state = state_with([1.0], 0.0)
        assert combine([0.73], 0.0, state) == 0.73

    def test_trace_weights(self):
        state = state_with([2.0 / 3.0], 1.0 / 3.0)
        assert abs(combine([0.9], 0.3, state) - 0.7) < 1e-12

    def test_length_mismatch(self):
        state = state_with([0.5, 0.5], 0.0)
        with pytest.raises(ValueError, match="2 source scores"):
            combine([0.2], 0.0, state)

    def test_score_out_of_range(self):
        state = state_with([1.0], 0.0)
        with pytest.raises(ValueError):
            combine([1.2], 0.0, state)
        with pytest.raises(ValueError):
            combine([0.5], -0.1, state)


class TestMsawStep:
    def test_hand_trace_exact(self):
        """n=1, alpha=2, beta=0.5, source correct, target incorrect.

        j becomes 1; w_T <- 1 * 0.5 * 1; normalization gives (2/3, 1/3);
        prob uses those weights; the target then takes the penalty
        sqrt(1)/(sqrt(1)+2) = 1/3, landing at exactly (2/3, 1/9).
        """
        cfg = MsawConfig(alpha=2.0, beta=0.5)
        state = EnsembleState.initial(1, cfg)
        prob, new_state = msaw_step(state, [0.9], 0.3, True)
        assert new_state.stream_index == 1
        assert new_state.normalized_weights.tolist() == [2.0 / 3.0, 1.0 / 3.0]
        assert prob == (2.0 / 3.0) * 0.9 + (1.0 / 3.0) * 0.3
        assert new_state.source_weights[0] == 2.0 / 3.0
        assert new_state.target_weight == 1.0 / 9.0

    def test_all_correct_keeps_normalized_weights(self):
        cfg = MsawConfig(alpha=2.0, beta=0.5)
        state = EnsembleState.initial(2, cfg)
        _, new_state = msaw_step(state, [0.9, 0.8], 0.7, True)
        np.testing.assert_array_equal(
            np.append(new_state.source_weights, new_state.target_weight),
            new_state.normalized_weights,
        )

    def test_prob_unaffected_by_own_penalties(self):
        cfg = MsawConfig(alpha=2.0, beta=0.5)
        state = EnsembleState.initial(2, cfg)
        prob_pos, _ = msaw_step(state, [0.9, 0.2], 0.6, True)
        prob_neg, _ = msaw_step(state, [0.9, 0.2], 0.6, False)
        assert prob_pos == prob_neg

    def test_all_correct_target_ratio_grows_by_beta_j(self):
        cfg = MsawConfig(alpha=2.0, beta=0.9)
        state = EnsembleState.initial(1, cfg)
        for expected_j in (1, 2, 3, 4, 5):
            ratio_before = state.target_weight / state.source_weights[0]
            _, state = msaw_step(state, [0.9], 0.8, True)
            assert state.stream_index == expected_j
            ratio_after = state.target_weight / state.source_weights[0]
            assert abs(ratio_after - ratio_before * cfg.beta * expected_j) < 1e-12

    def test_simplex_invariant(self):
        rng = np.random.default_rng(71)
        cfg = MsawConfig(alpha=3.0, beta=0.01)
        state = EnsembleState.initial(4, cfg)
        for _ in range(300):
            scores = rng.random(4)
            _, state = msaw_step(state, scores, float(rng.random()), bool(rng.integers(2)))
            w = state.normalized_weights
            assert (w >= 0).all()
            assert abs(w.sum() - 1.0) <= 1e-9
            assert np.isfinite(state.normalized_log_weights).all()

    def test_prob_stays_in_unit_interval(self):
        rng = np.random.default_rng(77)
        cfg = MsawConfig(alpha=2.5, beta=0.2)
        state = EnsembleState.initial(3, cfg)
        for _ in range(200):
            prob, state = msaw_step(
                state, rng.random(3), float(rng.random()), bool(rng.integers(2))
            )
            assert 0.0 <= prob <= 1.0

    def test_length_mismatch(self):
        state = EnsembleState.initial(3, MsawConfig())
        with pytest.raises(ValueError):
            msaw_step(state, [0.5, 0.5], 0.5, True)

    def test_invalid_state_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            state_with([-0.5, 1.0], 0.2)
        with pytest.raises(ValueError, match="NaN"):
            state_with([math.nan, 1.0], 0.2)


class TestStaticWeights:
    def test_volume_proportional(self):
        w = static_weights(WeightStrategy.volume([100, 300]), 2)
        assert w.tolist() == [0.25, 0.75]

    def test_equal(self):
        w = static_weights(WeightStrategy.equal(), 4)
        assert w.tolist() == [0.25, 0.25, 0.25, 0.25]

    def test_time_inverse_distance(self):
        w = static_weights(WeightStrategy.time([1, 2]), 2)
        assert abs(w[0] - 2.0 / 3.0) < 1e-12
        assert abs(w[1] - 1.0 / 3.0) < 1e-12

    def test_simplex_sum(self):
        rng = np.random.default_rng(73)
        for _ in range(20):
            n = int(rng.integers(1, 10))
            sizes = rng.integers(1, 1000, n)
            for strat in (
                WeightStrategy.equal(),
                WeightStrategy.volume(sizes),
                WeightStrategy.time(rng.integers(1, 20, n)),
            ):
                assert abs(static_weights(strat, n).sum() - 1.0) <= 1e-12

    def test_rescaling_invariance(self):
        sizes = [3.0, 5.0, 9.0]
        base = static_weights(WeightStrategy.volume(sizes), 3)
        doubled = static_weights(WeightStrategy.volume([2 * s for s in sizes]), 3)
        assert base.tolist() == doubled.tolist()
        scaled = static_weights(WeightStrategy.volume([0.37 * s for s in sizes]), 3)
        np.testing.assert_allclose(scaled, base, rtol=1e-15)
        assert np.argmax(scaled) == np.argmax(base)

    def test_errors(self):
        with pytest.raises(ValueError, match="positive total"):
            static_weights(WeightStrategy.volume([0.0, 0.0]), 2)
        with pytest.raises(ValueError, match="distance"):
            static_weights(WeightStrategy.time([0, 1]), 2)
        with pytest.raises(ValueError):
            static_weights(WeightStrategy.msaw(), 2)
        with pytest.raises(ValueError, match="unknown strategy"):
            WeightStrategy(kind="bogus")


class TestRunStream:
    def fitted_source(self, schema):
        rows = [("P", True)] * 4 + [("N", True)] + [("N", False)] * 6 + [("M", False)] * 2
        return fit_batch(
            schema,
            [
                Instance(values={"f0": v}, label=lab, ordinal=i)
                for i, (v, lab) in enumerate(rows)
            ],
        )

    def test_passthrough_equals_batch_scores(self, pnm_schema):
        model = self.fitted_source(pnm_schema)
        stream = tiny_stream(
            pnm_schema, [("P", True), ("N", False), ("M", True), ("P", False)]
        )
        records, trajectory = run_stream(
            [], model.copy(), stream, WeightStrategy.single(updates_target=False)
        )
        batch = model.predict_proba_batch(stream)
        assert [r.score for r in records] == batch.tolist()
        assert [r.ordinal for r in records] == [0, 1, 2, 3]
        assert trajectory == []

    def test_equal_over_identical_copies(self, pnm_schema):
        model = self.fitted_source(pnm_schema)
        stream = tiny_stream(pnm_schema, [("P", True), ("N", False), ("M", False)])
        records, _ = run_stream(
            [model.copy(), model.copy(), model.copy()],
            None,
            stream,
            WeightStrategy.equal(),
        )
        expected = model.predict_proba_batch(stream)
        np.testing.assert_allclose([r.score for r in records], expected, atol=1e-12)

    def test_online_updates_fold_into_model(self, pnm_schema):
        stream = tiny_stream(
            pnm_schema, [("P", True), ("N", False), ("P", True), ("N", False)]
        )
        model = NaiveBayesModel(pnm_schema)
        records, _ = run_stream(
            [], model, stream, WeightStrategy.single(updates_target=True)
        )
        assert records[0].score == 0.5  # empty model scores first
        assert model.class_counts.tolist() == [2, 2]
        # prequential: each score is computed before folding the instance in
        reference = NaiveBayesModel(pnm_schema)
        for record, inst in zip(records, stream):
            assert record.score == reference.predict_proba(inst)
            reference.update(inst)

    def test_adaptive_matches_manual_trace(self, pnm_schema):
        source = self.fitted_source(pnm_schema)
        stream = tiny_stream(
            pnm_schema,
            [("P", True), ("N", False), ("P", False), ("N", True), ("P", True)],
        )
        cfg = MsawConfig(alpha=2.0, beta=0.5)
        records, trajectory = run_stream(
            [source],
            NaiveBayesModel(pnm_schema),
            stream,
            WeightStrategy.msaw(),
            config=cfg,
            snapshot_stride=1,
        )
        probs, weights = manual_adaptive_run(
            source, NaiveBayesModel(pnm_schema), stream, 2.0, 0.5, 0.5
        )
        assert len(records) == 5
        for record, prob in zip(records, probs):
            assert abs(record.score - prob) < 1e-12
        assert len(trajectory) == 5
        for state, (w_s, w_t) in zip(trajectory, weights):
            assert abs(state.source_weights[0] - w_s) < 1e-12
            assert abs(state.target_weight - w_t) < 1e-12

    def test_snapshot_stride(self, pnm_schema):
        rng = np.random.default_rng(79)
        stream = random_season(rng, pnm_schema, 1200, season_id="t", role="target")
        source = self.fitted_source(pnm_schema)
        _, trajectory = run_stream(
            [source],
            NaiveBayesModel(pnm_schema),
            stream,
            WeightStrategy.msaw(),
            snapshot_stride=500,
        )
        assert [s.stream_index for s in trajectory] == [1, 500, 1000, 1200]

    def test_empty_stream_rejected(self, pnm_schema):
        stream = SeasonDataset.from_instances(pnm_schema, "empty", [])
        with pytest.raises(ValueError, match="empty"):
            run_stream([], NaiveBayesModel(pnm_schema), stream,
                       WeightStrategy.single(updates_target=False))

    def test_schema_mismatch_rejected(self, pnm_schema):
        other = make_schema(n_features=2)
        stream = tiny_stream(pnm_schema, [("P", True), ("N", False)])
        with pytest.raises(SchemaError):
            run_stream(
                [NaiveBayesModel(other)],
                NaiveBayesModel(pnm_schema),
                stream,
                WeightStrategy.equal(),
            )

    def test_adaptive_requires_sources_and_target(self, pnm_schema):
        stream = tiny_stream(pnm_schema, [("P", True), ("N", False)])
        with pytest.raises(ValueError, match="source"):
            run_stream([], NaiveBayesModel(pnm_schema), stream, WeightStrategy.msaw())
        with pytest.raises(ValueError, match="target"):
            run_stream(
                [self.fitted_source(pnm_schema)], None, stream, WeightStrategy.msaw()
            )


class TestTrajectoryExport:
    def test_csv_layout(self, pnm_schema, tmp_path):
        rng = np.random.default_rng(83)
        stream = random_season(rng, pnm_schema, 30, season_id="t", role="target")
        rows = [("P", True)] * 3 + [("N", False)] * 3
        source = fit_batch(
            pnm_schema,
            [Instance(values={"f0": v}, label=lab, ordinal=i) for i, (v, lab) in enumerate(rows)],
        )
        _, trajectory = run_stream(
            [source, source.copy()],
            NaiveBayesModel(pnm_schema),
            stream,
            WeightStrategy.msaw(),
            snapshot_stride=10,
        )
        path = tmp_path / "weights.csv"
        write_weight_trajectory(trajectory, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,w_S_1,w_S_2,w_T"
        assert len(lines) == len(trajectory) + 1
        first = lines[1].split(",")
        assert int(first[0]) == 1
        total = sum(float(x) for x in first[1:])
        assert abs(total - 1.0) <= 1e-9
