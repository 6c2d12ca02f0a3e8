"""Performance-weighted ensembling of member forecasts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import KeyMismatch, LengthMismatch, MemberFitFailure, TooFewMembers
from .models import ForecasterKind, ModelConfig, fit_model, forecast_model
from .timeseries import Series, SplitSpec, split_train_test

METRICS = ("mae", "mse", "rmse", "mape")
# held-out errors this small relative to the test level are rounding noise
NOISE_FLOOR = 1e-10


def compute_member_mae(forecast, test) -> float:
    f = np.asarray(forecast, dtype=float)
    y = np.asarray(test, dtype=float)
    if f.shape != y.shape or f.ndim != 1 or f.size == 0:
        raise LengthMismatch(f"forecast length {f.shape} vs test length {y.shape}")
    return float(np.mean(np.abs(f - y)))


def member_error(forecast, test, metric: str = "mae") -> float:
    """Held-out error used for weighting. MAE unless another metric is requested."""
    if metric == "mae":
        return compute_member_mae(forecast, test)
    f = np.asarray(forecast, dtype=float)
    y = np.asarray(test, dtype=float)
    if f.shape != y.shape or f.size == 0:
        raise LengthMismatch(f"forecast length {f.shape} vs test length {y.shape}")
    if metric == "mse":
        return float(np.mean((f - y) ** 2))
    if metric == "rmse":
        return float(np.sqrt(np.mean((f - y) ** 2)))
    if metric == "mape":
        return float(np.mean(np.abs((f - y) / y)))
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class PerformanceReport:
    maes: dict
    horizon_used: int
    metric: str = "mae"

    def __post_init__(self):
        if len(self.maes) < 2:
            raise TooFewMembers(f"need at least 2 members, got {len(self.maes)}")
        for k, v in self.maes.items():
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"error for {k!r} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class WeightVector:
    weights: dict

    def __getitem__(self, key):
        return self.weights[key]

    def keys(self):
        return self.weights.keys()

    def items(self):
        return self.weights.items()


def compute_weights(report: PerformanceReport) -> WeightVector:
    """Invert the errors relative to their total, then normalize.

    ``e'_i = 1 - e_i / sum(e)`` and ``w_i = e'_i / sum(e')``. When every
    member is perfect the ratio is undefined and weights fall back to equal.
    """
    maes = report.maes
    k = len(maes)
    if k < 2:
        raise TooFewMembers(f"need at least 2 members, got {k}")
    total = sum(maes.values())
    if total == 0:
        return WeightVector({key: 1.0 / k for key in maes})
    inverted = {key: 1.0 - v / total for key, v in maes.items()}
    norm = sum(inverted.values())
    return WeightVector({key: v / norm for key, v in inverted.items()})


def combine(forecasts: Mapping[str, Sequence[float]], weights: WeightVector) -> np.ndarray:
    if set(forecasts) != set(weights.keys()):
        raise KeyMismatch(f"forecast keys {sorted(forecasts)} != weight keys {sorted(weights.keys())}")
    lengths = {len(v) for v in forecasts.values()}
    if len(lengths) != 1:
        raise LengthMismatch(f"member forecasts have lengths {sorted(lengths)}")
    out = np.zeros(lengths.pop())
    # fixed key order keeps the float summation reproducible
    for key in weights.keys():
        out += weights[key] * np.asarray(forecasts[key], dtype=float)
    return out


def normalize_members(members) -> dict:
    """Accept a list of kinds or a ``label -> kind`` mapping; return the mapping."""
    if isinstance(members, Mapping):
        return {str(label): ForecasterKind(kind) for label, kind in members.items()}
    out = {}
    for kind in members:
        kind = ForecasterKind(kind)
        if kind.value in out:
            raise ValueError(f"duplicate member {kind.value}; use a label mapping for repeats")
        out[kind.value] = kind
    return out


def _snap(err: float, test, metric: str) -> float:
    level = float(np.mean(np.abs(test)))
    if metric == "mse":
        level = level ** 2
    elif metric == "mape":
        level = 1.0
    return 0.0 if err <= NOISE_FLOOR * max(level, 1e-300) else err


@dataclass
class RoundResult:
    forecast: np.ndarray
    weights: WeightVector
    report: PerformanceReport
    member_forecasts: dict        # label -> production forecasts (100% fit)
    performance_forecasts: dict   # label -> forecasts over the held-out segment
    test_values: np.ndarray
    fit_length: int
    models: dict                  # label -> TrainedModel fitted on the full series


def ensemble_round(
    series: Series,
    members,
    horizon: int,
    config: ModelConfig = ModelConfig(),
    split: SplitSpec = SplitSpec(),
    seed: int = 0,
    metric: str = "mae",
    prefit: Mapping[str, tuple] | None = None,
) -> RoundResult:
    """One performance split plus one production fit.

    Members are fitted on the leading ``split`` fraction and scored on the
    rest; the resulting weights then combine forecasts from members refit on
    the whole series. ``prefit`` maps labels to ``(performance_model,
    full_model)`` pairs trained elsewhere (the pooled LSTM).
    """
    members = normalize_members(members)
    if len(members) < 2:
        raise TooFewMembers(f"need at least 2 members, got {len(members)}")
    prefit = prefit or {}
    train, test = split_train_test(series, split)

    def fit(label, kind, values, which):
        if label in prefit:
            return prefit[label][which]
        return fit_model(kind, values, series.frequency, config, seed)

    perf, errors, full_models, prod = {}, {}, {}, {}
    for label, kind in members.items():
        try:
            model = fit(label, kind, train.values, 0)
            perf[label] = forecast_model(model, train.values, len(test))
            errors[label] = _snap(member_error(perf[label], test.values, metric), test.values, metric)
            full = fit(label, kind, series.values, 1)
            prod[label] = forecast_model(full, series.values, horizon)
            full_models[label] = full
        except Exception as exc:  # any member failure aborts this series
            raise MemberFitFailure(label, f"{type(exc).__name__}: {exc}") from exc
        if not (np.all(np.isfinite(perf[label])) and np.all(np.isfinite(prod[label]))):
            raise MemberFitFailure(label, "non-finite forecast")

    report = PerformanceReport(errors, len(test), metric)
    weights = compute_weights(report)
    return RoundResult(
        forecast=combine(prod, weights),
        weights=weights,
        report=report,
        member_forecasts=prod,
        performance_forecasts=perf,
        test_values=np.array(test.values),
        fit_length=len(series),
        models=full_models,
    )
