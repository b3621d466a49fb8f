"""Sliding-window forecasting probe: windowing, training, error metric."""

import numpy as np
import pytest
import torch

from seqaugment.cohort import holdout_split
from seqaugment.downstream import (
    RegressionReport,
    RegressorConfig,
    WindowedSample,
    assert_no_leakage,
    evaluate_regressor,
    make_windows,
    target_variables,
    train_regressor,
    window_count,
)
from seqaugment.encoding import CohortCodec
from seqaugment.errors import DataError, WindowTooLong
from seqaugment.schema import CohortSchema, VariableSpec

from conftest import build_cohort, mini_schema, random_mini_cohort


class TestWindowCount:
    def test_reference_case(self):
        assert window_count(48, 20, 1) == 28

    def test_boundary_single_window(self):
        assert window_count(21, 20, 1) == 1

    def test_too_long_raises(self):
        with pytest.raises(WindowTooLong):
            window_count(20, 20, 1)

    @pytest.mark.parametrize("T,w_in,w_out", [(10, 3, 2), (6, 1, 1), (48, 20, 1), (7, 5, 2)])
    def test_formula_matches_enumeration(self, T, w_in, w_out):
        starts = [t for t in range(T) if t + w_in + w_out <= T]
        assert window_count(T, w_in, w_out) == len(starts)


class TestMakeWindows:
    def test_counts_and_no_patient_crossing(self):
        cohort = random_mini_cohort(3, 2, seed=1)
        codec = CohortCodec.fit(cohort, embed_dim=2, seed=0)
        windows = make_windows(cohort, codec, w_in=3, w_out=1)
        per_patient = window_count(6, 3, 1)
        assert len(windows) == per_patient * len(cohort)
        sources = {w.source_patient for w in windows}
        assert sources == set(cohort.patient_ids)

    def test_window_contents_match_encoding(self):
        cohort = random_mini_cohort(1, 1, seed=2)
        codec = CohortCodec.fit(cohort, embed_dim=2, seed=0)
        batch = codec.encode(cohort)
        windows = make_windows(cohort, codec, w_in=2, w_out=1)
        first = windows[0]
        per_step = np.concatenate(
            [batch.numeric[0, :2], batch.embedded[0, :2].reshape(2, -1)], axis=1
        )
        assert np.allclose(first.inputs, per_step)
        # target: numeric channels at hour 2, then the categorical embedding
        assert np.allclose(first.target[:2], batch.numeric[0, 2])
        assert np.allclose(first.target[2:6], batch.embedded[0, 2, 0])

    def test_targets_exclude_flags(self):
        schema = mini_schema()
        assert target_variables(schema) == ["pressure", "flow", "dose"]

    def test_reference_targets_are_the_13_nonflag_variables(self):
        from seqaugment.schema import hypotension_schema

        names = target_variables(hypotension_schema())
        assert len(names) == 13
        assert not any(name.endswith("_m") for name in names)

    def test_too_long_window_raises(self):
        cohort = random_mini_cohort(1, 1, seed=3)
        codec = CohortCodec.fit(cohort, embed_dim=2, seed=0)
        with pytest.raises(WindowTooLong):
            make_windows(cohort, codec, w_in=6, w_out=1)


def linear_windows(n=400, w_in=8, width=3, seed=0):
    """Windows whose target is exactly the last input row (learnable)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        inputs = rng.uniform(-1, 1, size=(w_in, width))
        out.append(WindowedSample(inputs=inputs, target=inputs[-1, :2].copy(),
                                  source_patient=f"w{i}"))
    return out


class TestTrainRegressor:
    def test_learns_linearly_predictable_series(self):
        windows = linear_windows()
        cfg = RegressorConfig(hidden_size=32, lr=5e-3, epochs=12, batch_size=64, seed=1)
        bundle = train_regressor(windows, cfg)
        assert bundle.history[-1] < 0.1 * bundle.history[0]

    def test_deterministic_under_seed(self):
        windows = linear_windows(n=60)
        cfg = RegressorConfig(hidden_size=8, lr=1e-3, epochs=2, batch_size=16, seed=7)
        a = train_regressor(windows, cfg)
        b = train_regressor(windows, cfg)
        for pa, pb in zip(a.model.parameters(), b.model.parameters()):
            assert torch.equal(pa, pb)

    def test_zero_epochs_returns_initial_parameters(self):
        windows = linear_windows(n=30)
        cfg = RegressorConfig(hidden_size=8, epochs=0, seed=3)
        bundle = train_regressor(windows, cfg)
        # re-seeding reproduces the same initialization
        fresh = train_regressor(windows, RegressorConfig(hidden_size=8, epochs=0, seed=3))
        for pa, pb in zip(bundle.model.parameters(), fresh.model.parameters()):
            assert torch.equal(pa, pb)
        assert bundle.history == []

    def test_empty_windows_rejected(self):
        with pytest.raises(DataError):
            train_regressor([], RegressorConfig())


class _DuckBundle:
    """Stand-in regressor returning a fixed prediction matrix."""

    def __init__(self, output):
        self.output = np.asarray(output, dtype=float)

    def predict(self, inputs):
        return np.broadcast_to(self.output, (inputs.shape[0], self.output.shape[-1])).copy()


class _EchoBundle:
    """Returns the true encoded targets (a perfect predictor)."""

    def __init__(self, targets):
        self.targets = targets

    def predict(self, inputs):
        return self.targets.copy()


class TestEvaluateRegressor:
    def numeric_schema_cohort(self, values, series_length):
        schema = CohortSchema(
            (VariableSpec("x", "numeric"),), series_length=series_length
        )
        rows = [[[float(v)] for v in series] for series in values]
        return schema, build_cohort(schema, rows, [1] * len(values))

    def test_perfect_predictor_zero_error(self):
        cohort = random_mini_cohort(2, 2, seed=5)
        codec = CohortCodec.fit(cohort, embed_dim=2, seed=0)
        windows = make_windows(cohort, codec, w_in=3, w_out=1)
        targets = np.stack([w.target for w in windows])
        errors = evaluate_regressor(_EchoBundle(targets), cohort, codec, w_in=3, w_out=1)
        assert all(v == pytest.approx(0.0, abs=1e-9) for v in errors.values())

    def test_constant_zero_predictor_on_unit_targets(self):
        # truths at the predicted hour equal 1; a 0-predictor scores 100%.
        # history rows pin the scaler endpoints at 0 and 2 so 0 encodes exactly.
        rng = np.random.default_rng(0)
        series = [[0.0, 2.0, float(rng.uniform(0.0, 2.0)), 1.0] for _ in range(4)]
        schema, cohort = self.numeric_schema_cohort(series, series_length=4)
        codec = CohortCodec.fit(cohort)
        encoded_zero = codec.scale_numeric(np.array([[0.0]]))[0]
        errors = evaluate_regressor(
            _DuckBundle(encoded_zero), cohort, codec, w_in=3, w_out=1
        )
        assert errors["x"] == pytest.approx(100.0, rel=1e-5)

    def test_scale_aware_relative_error(self):
        rng = np.random.default_rng(1)
        base = rng.uniform(5.0, 10.0, size=(3, 4))
        schema1, cohort1 = self.numeric_schema_cohort(base.tolist(), 4)
        schema2, cohort2 = self.numeric_schema_cohort((2 * base).tolist(), 4)
        codec1 = CohortCodec.fit(cohort1)
        codec2 = CohortCodec.fit(cohort2)
        pred1 = codec1.scale_numeric(np.array([[6.0]]))[0]
        pred2 = codec2.scale_numeric(np.array([[12.0]]))[0]
        e1 = evaluate_regressor(_DuckBundle(pred1), cohort1, codec1, w_in=3, w_out=1)
        e2 = evaluate_regressor(_DuckBundle(pred2), cohort2, codec2, w_in=3, w_out=1)
        assert e1["x"] == pytest.approx(e2["x"], rel=1e-5)


class TestLeakage:
    def test_clean_split_passes(self):
        cohort = random_mini_cohort(5, 4, seed=9)
        train, test = holdout_split(cohort, 2, seed=1)
        assert_no_leakage(test, train)

    def test_overlap_detected(self):
        cohort = random_mini_cohort(5, 4, seed=9)
        with pytest.raises(DataError):
            assert_no_leakage(cohort, cohort)


class TestRegressionReport:
    def test_medians_and_csv(self, tmp_path):
        errors = {
            "real": {"a": 10.0, "b": 20.0, "c": 30.0},
            "synthetic": {"a": 12.0, "b": 24.0, "c": 36.0},
            "augmented": {"a": 8.0, "b": 16.0, "c": 24.0},
        }
        report = RegressionReport.from_errors(errors)
        assert report.medians == {"real": 20.0, "synthetic": 24.0, "augmented": 16.0}
        path = tmp_path / "downstream.csv"
        report.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "variable,real,synthetic,augmented"
        assert lines[-1].startswith("median,")
