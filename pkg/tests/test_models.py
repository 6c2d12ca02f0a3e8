import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import max_relative_error, numeric_gradient, random_lstm_instance
from edms.errors import NonPositiveValue, SeriesTooShort, ShapeMismatch
from edms.models import (
    ALL_KINDS,
    ForecasterKind,
    ModelConfig,
    fit_model,
    forecast_model,
    model_from_dict,
    model_to_dict,
)
from edms.models.growth import fit_avg_growth, forecast_avg_growth
from edms.models.holt import advance, fit_holt, forecast_holt, holt_filter
from edms.models.lstm import (
    LstmTrainConfig,
    fit_lstm,
    forecast_lstm,
    init_params,
    loss_and_grad,
    lstm_forward,
    make_windows,
)
from edms.models.regression import RegressionParams, design_matrix, fit_regression, forecast_regression


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestAvgGrowth:
    def test_multiplicative(self):
        p = fit_avg_growth([100.0, 110.0, 121.0])
        assert p.g == pytest.approx(1.1, abs=1e-14)
        np.testing.assert_allclose(forecast_avg_growth(p, 2), [133.1, 146.41], rtol=1e-13)

    def test_additive(self):
        p = fit_avg_growth([1.0, 3.0, 4.0, 8.0], additive=True)
        assert p.g == pytest.approx(7.0 / 3.0)
        np.testing.assert_allclose(forecast_avg_growth(p, 3), 8.0 + np.arange(1, 4) * 7.0 / 3.0)

    def test_constant_series_is_flat(self):
        f = forecast_avg_growth(fit_avg_growth([5.0] * 6), 4)
        np.testing.assert_array_equal(f, [5.0] * 4)

    def test_reanchors(self):
        p = fit_avg_growth([1.0, 2.0])
        np.testing.assert_allclose(forecast_avg_growth(p, 2, last_value=10.0), [20.0, 40.0])

    def test_nonpositive_rejected(self):
        with pytest.raises(NonPositiveValue):
            fit_avg_growth([1.0, 0.0, 2.0])

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            fit_avg_growth([1.0])


class TestRegression:
    def test_linear_exact(self):
        y = 3.0 + 2.0 * np.arange(5)
        p = fit_regression(y, 1)
        np.testing.assert_allclose(p.coefficients, [3.0, 2.0], atol=1e-12)
        np.testing.assert_allclose(forecast_regression(p, 5, 2), [13.0, 15.0], atol=1e-11)

    def test_quadratic_exact(self):
        y = 1.0 + np.arange(4.0) ** 2
        p = fit_regression(y, 2)
        np.testing.assert_allclose(p.coefficients, [1.0, 0.0, 1.0], atol=1e-9)
        np.testing.assert_allclose(forecast_regression(p, 4, 1), [17.0], atol=1e-9)

    def test_forecast_from_coefficients(self):
        quad = RegressionParams((1.0, 0.0, 1.0), 2)
        np.testing.assert_array_equal(forecast_regression(quad, 3, 1), [10.0])
        zero = RegressionParams((0.0, 0.0), 1)
        np.testing.assert_array_equal(forecast_regression(zero, 7, 3), [0.0] * 3)

    @settings(max_examples=50)
    @given(st.integers(0, 10_000), st.integers(1, 2), st.integers(5, 40))
    def test_normal_equations(self, seed, degree, n):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=n) * 10 + rng.uniform(-5, 5) * np.arange(n)
        p = fit_regression(y, degree)
        X = design_matrix(np.arange(n), degree)
        beta = np.asarray(p.coefficients)
        resid = X.T @ (X @ beta - y)
        assert np.max(np.abs(resid)) <= 1e-8 * max(1.0, np.max(np.abs(X.T @ y)))

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            fit_regression([1.0, 2.0], 2)


class TestHolt:
    def test_affine_has_zero_one_step_error(self):
        y = 7.0 + 0.3 * np.arange(40)
        p = fit_holt(y)
        assert p.rss <= 1e-9
        np.testing.assert_allclose(forecast_holt(p, 3), 7.0 + 0.3 * np.arange(40, 43), atol=1e-9)

    def test_constant_series(self):
        p = fit_holt([4.0] * 10)
        assert p.rss == 0.0 and p.trend == 0.0
        np.testing.assert_array_equal(forecast_holt(p, 3), [4.0] * 3)

    def test_filter_matches_scalar_recursion(self, rng):
        y = rng.normal(size=15).cumsum()
        a, g = 0.37, 0.62
        level, trend, rss = y[0], y[1] - y[0], 0.0
        for t in range(1, 15):
            rss += (y[t] - level - trend) ** 2
            new = a * y[t] + (1 - a) * (level + trend)
            trend = g * (new - level) + (1 - g) * trend
            level = new
        lv, tr, r = holt_filter(y, a, g)
        assert (float(lv), float(tr), float(r)) == pytest.approx((level, trend, rss), rel=1e-12)

    def test_beats_random_probes(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            y = 50 + rng.normal(size=30).cumsum() + 0.5 * np.arange(30)
            p = fit_holt(y)
            probes = rng.uniform(0.001, 0.999, size=(100, 2))
            rss = holt_filter(y, probes[:, 0], probes[:, 1])[2]
            assert p.rss <= rss.min() + 1e-9 * max(1.0, p.rss)

    def test_advance_matches_refilter(self, rng):
        y = rng.normal(size=20).cumsum() + 30
        p = fit_holt(y[:14])
        moved = advance(p, y[14:])
        lv, tr, _ = holt_filter(y, p.alpha, p.gamma)
        assert (moved.level, moved.trend) == pytest.approx((float(lv), float(tr)), rel=1e-12)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            fit_holt([1.0, 2.0])


class TestLstmForward:
    def test_zero_weights_predict_bias(self):
        p = init_params(4, 3, 0).with_weights(U=np.zeros(16), W=np.zeros((4, 16)), w_out=np.zeros(4), b_out=0.0)
        pred, c = lstm_forward(p, np.array([1.0, -2.0, 3.0]))
        assert pred == 0.0
        np.testing.assert_array_equal(c, np.zeros(4))

    def test_hand_trace_single_unit(self):
        # packed gate order (f, i, C, o)
        U = np.array([0.5, -0.3, 0.8, 0.2])
        W = np.array([[0.1, 0.4, -0.6, 0.7]])
        p = init_params(1, 2, 0).with_weights(U=U, W=W, w_out=np.array([1.5]), b_out=0.25)
        h = c = 0.0
        for x in (0.7, -1.2):
            f = sigmoid(x * U[0] + h * W[0, 0])
            i = sigmoid(x * U[1] + h * W[0, 1])
            g = math.tanh(x * U[2] + h * W[0, 2])
            o = sigmoid(x * U[3] + h * W[0, 3])
            c = i * g + f * c
            h = o * math.tanh(c)
        pred, cell = lstm_forward(p, np.array([0.7, -1.2]))
        assert pred == pytest.approx(1.5 * h + 0.25, abs=1e-12)
        assert cell[0] == pytest.approx(c, abs=1e-12)

    def test_gate_slices(self):
        p = init_params(3, 2, 1)
        np.testing.assert_array_equal(np.concatenate([p.U_f, p.U_i, p.U_C, p.U_o]), p.U)
        assert p.W_o.shape == (3, 3)

    def test_hidden_permutation_invariance(self, rng):
        H = 4
        p, X, _ = random_lstm_instance(3, hidden=H, window=6, batch=1)
        perm = rng.permutation(H)
        cols = np.concatenate([k * H + perm for k in range(4)])
        q = p.with_weights(U=p.U[cols], W=p.W[perm][:, cols], w_out=p.w_out[perm])
        a, _ = lstm_forward(p, X[0])
        b, _ = lstm_forward(q, X[0])
        assert a == pytest.approx(b, abs=1e-12)

    @settings(max_examples=30)
    @given(st.integers(0, 10_000))
    def test_cell_growth_is_bounded(self, seed):
        # |C_t| <= |C_{t-1}| + 1 since every gate lies in (0, 1) and the candidate in (-1, 1)
        p, X, _ = random_lstm_instance(seed, hidden=3, window=8, batch=1)
        _, c = lstm_forward(p, X[0] * 50)
        assert np.all(np.abs(c) < 8.0)

    def test_window_shape_checked(self):
        with pytest.raises(ShapeMismatch):
            lstm_forward(init_params(2, 3, 0), np.zeros(4))

    def test_windows(self):
        X, y = make_windows(np.arange(6.0), 3)
        np.testing.assert_array_equal(X, [[0, 1, 2], [1, 2, 3], [2, 3, 4]])
        np.testing.assert_array_equal(y, [3, 4, 5])


class TestLstmTraining:
    @pytest.mark.parametrize("seed", range(3))
    def test_gradient_matches_finite_differences(self, seed):
        p, X, y = random_lstm_instance(seed)
        _, grads = loss_and_grad(p, X, y)
        num = numeric_gradient(p, X, y, names=("U", "W", "w_out", "b_out"))
        assert max_relative_error(grads, num) < 1e-4

    def test_bias_gradient(self):
        p, X, y = random_lstm_instance(4, use_bias=True)
        _, grads = loss_and_grad(p, X, y)
        assert max_relative_error(grads, numeric_gradient(p, X, y)) < 1e-4

    def test_bias_frozen_by_default(self):
        p, X, y = random_lstm_instance(5)
        _, grads = loss_and_grad(p, X, y)
        np.testing.assert_array_equal(grads["b"], 0.0)

    def test_loss_decreases(self):
        y = 10 + np.sin(np.arange(60) / 3.0)
        p = fit_lstm(y, LstmTrainConfig(hidden_size=8, lookback=6, epochs=150, seed=1))
        assert p.loss_last < p.loss_first

    def test_constant_series(self):
        y = np.full(30, 42.0)
        p = fit_lstm(y, LstmTrainConfig(hidden_size=4, lookback=4, epochs=100, seed=0))
        f = forecast_lstm(p, y, 6)
        np.testing.assert_allclose(f, 42.0, rtol=0.05)

    def test_deterministic(self):
        y = 5 + np.random.default_rng(0).normal(size=40).cumsum()
        cfg = LstmTrainConfig(hidden_size=5, lookback=4, epochs=30, seed=11)
        a, b = fit_lstm(y, cfg), fit_lstm(y, cfg)
        np.testing.assert_array_equal(a.W, b.W)
        np.testing.assert_array_equal(forecast_lstm(a, y, 5), forecast_lstm(b, y, 5))

    def test_roll_feeds_predictions_back(self):
        # a network that outputs zero in normalized units maps to the training mean forever
        y = np.arange(1.0, 21.0)
        p = fit_lstm(y, LstmTrainConfig(hidden_size=2, lookback=3, epochs=1, seed=0))
        p = p.with_weights(w_out=np.zeros(2), b_out=0.0)
        np.testing.assert_allclose(forecast_lstm(p, y, 4), np.mean(y))

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            fit_lstm(np.arange(5.0), LstmTrainConfig(lookback=4))


SMALL = ModelConfig(lstm_hidden_size=3, lstm_epochs=5)


class TestDispatch:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_json_round_trip(self, kind):
        y = 20 + np.arange(24.0) + np.sin(np.arange(24.0))
        m = fit_model(kind, y, "quarterly", SMALL, seed=3)
        back = model_from_dict(json.loads(json.dumps(model_to_dict(m))))
        np.testing.assert_array_equal(forecast_model(m, y, 5), forecast_model(back, y, 5))

    def test_extended_context(self):
        y = 2.0 + 3.0 * np.arange(12)
        for kind in (ForecasterKind.LINEAR, ForecasterKind.HOLT):
            m = fit_model(kind, y[:10])
            np.testing.assert_allclose(forecast_model(m, y, 2), 2.0 + 3.0 * np.arange(12, 14), atol=1e-9)

    def test_short_context_rejected(self):
        m = fit_model("linear", np.arange(10.0))
        with pytest.raises(Exception):
            forecast_model(m, np.arange(5.0), 2)
