import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edms.ensemble import (
    PerformanceReport,
    WeightVector,
    combine,
    compute_member_mae,
    compute_weights,
    ensemble_round,
    member_error,
)
from edms.errors import KeyMismatch, LengthMismatch, MemberFitFailure, TooFewMembers
from edms.models import ModelConfig, fit_model, forecast_model
from edms.timeseries import Series, SplitSpec, split_train_test

maes_strategy = st.lists(st.floats(1e-6, 1e6), min_size=2, max_size=8)


def weights_of(values):
    return compute_weights(PerformanceReport({f"m{k}": v for k, v in enumerate(values)}, 1))


class TestMae:
    @pytest.mark.parametrize(
        "forecast, test, expected",
        [((5.0, 6.0), (5.0, 6.0), 0.0), ((1.0, 2.0), (2.0, 4.0), 1.5), ((0.0,), (-3.0,), 3.0)],
    )
    def test_examples(self, forecast, test, expected):
        assert compute_member_mae(forecast, test) == expected

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            compute_member_mae([1.0], [1.0, 2.0])

    def test_other_metrics(self):
        f, y = [2.0, 4.0], [1.0, 2.0]
        assert member_error(f, y, "mse") == 2.5
        assert member_error(f, y, "rmse") == pytest.approx(2.5 ** 0.5)
        assert member_error(f, y, "mape") == 1.0


class TestWeights:
    def test_example(self):
        w = compute_weights(PerformanceReport({"A": 1.0, "B": 2.0, "C": 3.0}, 4))
        for key, expected in (("A", 5 / 12), ("B", 4 / 12), ("C", 3 / 12)):
            assert abs(w[key] - expected) <= 1e-12

    @pytest.mark.parametrize("x", [0.0, 1e-3, 7.0])
    def test_symmetric_pair(self, x):
        w = compute_weights(PerformanceReport({"A": x, "B": x}, 1))
        assert w.weights == {"A": 0.5, "B": 0.5}

    def test_needs_two_members(self):
        with pytest.raises(TooFewMembers):
            PerformanceReport({"A": 1.0}, 1)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PerformanceReport({"A": -1.0, "B": 1.0}, 1)

    @given(maes_strategy)
    def test_simplex(self, maes):
        w = list(weights_of(maes).weights.values())
        assert all(0.0 <= x <= 1.0 for x in w)
        assert abs(sum(w) - 1.0) <= 1e-12

    @given(maes_strategy, st.floats(1e-3, 1e3))
    def test_scale_invariant(self, maes, c):
        a = weights_of(maes).weights
        b = weights_of([c * m for m in maes]).weights
        for k in a:
            assert abs(a[k] - b[k]) <= 1e-12

    @given(maes_strategy)
    def test_monotone(self, maes):
        w = weights_of(maes).weights
        for i, a in enumerate(maes):
            for j, b in enumerate(maes):
                if a < b:
                    assert w[f"m{i}"] > w[f"m{j}"]

    def test_keys_and_order_preserved(self):
        w = compute_weights(PerformanceReport({"z": 1.0, "a": 2.0}, 1))
        assert list(w.keys()) == ["z", "a"]


class TestCombine:
    def test_identical_members(self):
        f = np.array([1.5, -2.0, 3.25])
        w = WeightVector({"a": 0.2, "b": 0.3, "c": 0.5})
        np.testing.assert_allclose(combine({"a": f, "b": f, "c": f}, w), f, rtol=1e-15)

    def test_example(self):
        out = combine({"a": [0.0, 0.0], "b": [10.0, 10.0]}, WeightVector({"a": 0.3, "b": 0.7}))
        np.testing.assert_allclose(out, [7.0, 7.0], rtol=1e-15)

    def test_unit_weight(self):
        f = [1.1, 2.2]
        out = combine({"a": f, "b": [9.0, 9.0]}, WeightVector({"a": 1.0, "b": 0.0}))
        np.testing.assert_array_equal(out, f)

    def test_key_mismatch(self):
        with pytest.raises(KeyMismatch):
            combine({"a": [1.0]}, WeightVector({"a": 0.5, "b": 0.5}))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            combine({"a": [1.0], "b": [1.0, 2.0]}, WeightVector({"a": 0.5, "b": 0.5}))

    @settings(max_examples=100)
    @given(maes_strategy, st.integers(0, 2 ** 32 - 1))
    def test_convex(self, maes, seed):
        rng = np.random.default_rng(seed)
        w = weights_of(maes)
        members = {k: rng.normal(size=6) * 100 for k in w.keys()}
        out = combine(members, w)
        stack = np.vstack(list(members.values()))
        tol = 1e-9 * np.max(np.abs(stack))
        assert np.all(out >= stack.min(axis=0) - tol)
        assert np.all(out <= stack.max(axis=0) + tol)


SMALL = ModelConfig(lstm_hidden_size=4, lstm_epochs=20)


class TestEnsembleRound:
    def test_duplicate_members(self):
        s = Series("x", 10.0 * 1.03 ** np.arange(30))
        r = ensemble_round(s, {"g1": "avg_growth", "g2": "avg_growth"}, 5)
        assert r.weights.weights == {"g1": 0.5, "g2": 0.5}
        direct = forecast_model(fit_model("avg_growth", s.values), s.values, 5)
        np.testing.assert_allclose(r.forecast, direct, rtol=1e-15)

    def test_affine_linear_holt(self):
        s = Series("x", 4.0 + 0.5 * np.arange(40))
        r = ensemble_round(s, ["linear", "holt"], 6)
        assert r.weights.weights == {"linear": 0.5, "holt": 0.5}
        np.testing.assert_allclose(r.forecast, 4.0 + 0.5 * np.arange(40, 46), atol=1e-8)

    def test_recomposition(self, rng):
        s = Series("x", 50 + rng.normal(size=48).cumsum(), "quarterly")
        r = ensemble_round(s, ["avg_growth", "linear", "polynomial", "holt", "lstm"], 8, SMALL, seed=2)
        manual = sum(r.weights[k] * r.member_forecasts[k] for k in r.weights.keys())
        np.testing.assert_allclose(r.forecast, manual, atol=1e-12, rtol=0)
        expected = compute_weights(PerformanceReport(r.report.maes, r.report.horizon_used))
        assert expected.weights == r.weights.weights

    def test_performance_split(self, rng):
        s = Series("x", 50 + rng.normal(size=25).cumsum())
        r = ensemble_round(s, ["linear", "holt"], 3)
        train, test = split_train_test(s, SplitSpec())
        assert r.report.horizon_used == len(test) == 5
        np.testing.assert_array_equal(r.test_values, test.values)
        m = fit_model("linear", train.values)
        assert r.report.maes["linear"] == compute_member_mae(forecast_model(m, train.values, 5), test.values)

    def test_member_failure_named(self):
        s = Series("x", np.concatenate([[-1.0], np.arange(1.0, 20.0)]))
        with pytest.raises(MemberFitFailure) as exc:
            ensemble_round(s, ["linear", "avg_growth"], 2)
        assert exc.value.label == "avg_growth"
