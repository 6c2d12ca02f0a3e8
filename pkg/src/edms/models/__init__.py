"""The five ensemble members behind one fit/forecast interface."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .growth import GrowthParams, fit_avg_growth, forecast_avg_growth
from .holt import HoltParams, advance, fit_holt, forecast_holt
from .lstm import (
    DEFAULT_LOOKBACK,
    LstmParams,
    LstmTrainConfig,
    fit_lstm,
    fit_lstm_global,
    forecast_lstm,
    lstm_forward,
)
from .regression import RegressionParams, fit_regression, forecast_regression


class ForecasterKind(str, enum.Enum):
    AVG_GROWTH = "avg_growth"
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    HOLT = "holt"
    LSTM = "lstm"

    def __str__(self):
        return self.value


ALL_KINDS = tuple(ForecasterKind)

_PARAM_TYPES = {
    ForecasterKind.AVG_GROWTH: GrowthParams,
    ForecasterKind.LINEAR: RegressionParams,
    ForecasterKind.POLYNOMIAL: RegressionParams,
    ForecasterKind.HOLT: HoltParams,
    ForecasterKind.LSTM: LstmParams,
}


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters for every member kind.

    ``lstm_lookback`` of ``None`` resolves from the series frequency.
    """

    additive_growth: bool = False
    lstm_hidden_size: int = 16
    lstm_lookback: int | None = None
    lstm_epochs: int = 200
    lstm_learning_rate: float = 1e-2
    lstm_use_bias: bool = False

    def lstm_config(self, frequency: str, seed: int) -> LstmTrainConfig:
        lookback = self.lstm_lookback or DEFAULT_LOOKBACK[frequency]
        return LstmTrainConfig(
            hidden_size=self.lstm_hidden_size,
            lookback=lookback,
            epochs=self.lstm_epochs,
            learning_rate=self.lstm_learning_rate,
            use_bias=self.lstm_use_bias,
            seed=seed,
        )


@dataclass(frozen=True)
class TrainedModel:
    kind: ForecasterKind
    params: object
    train_length: int
    seed: int = 0
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = ForecasterKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.params, _PARAM_TYPES[kind]):
            raise DataError(f"{type(self.params).__name__} does not match kind {kind}")

    def forecast(self, context, h: int) -> np.ndarray:
        return forecast_model(self, context, h)


def fit_model(kind, values, frequency: str = "annual", config: ModelConfig = ModelConfig(),
              seed: int = 0) -> TrainedModel:
    kind = ForecasterKind(kind)
    y = np.asarray(values, dtype=float)
    cfg = {}
    if kind is ForecasterKind.AVG_GROWTH:
        params = fit_avg_growth(y, additive=config.additive_growth)
        cfg = {"additive_growth": config.additive_growth}
    elif kind is ForecasterKind.LINEAR:
        params = fit_regression(y, 1)
    elif kind is ForecasterKind.POLYNOMIAL:
        params = fit_regression(y, 2)
    elif kind is ForecasterKind.HOLT:
        params = fit_holt(y)
    else:
        lcfg = config.lstm_config(frequency, seed)
        params = fit_lstm(y, lcfg)
        cfg = params.config
    return TrainedModel(kind, params, int(y.size), seed, cfg)


def forecast_model(model: TrainedModel, context, h: int) -> np.ndarray:
    """Forecast ``h`` steps past the end of ``context``.

    ``context`` is the training series, possibly extended by later values;
    closed-form members re-anchor at its end, the LSTM rolls forward from
    its last window.
    """
    if h < 1:
        raise ValueError("horizon must be at least 1")
    y = np.asarray(context, dtype=float)
    if y.size < model.train_length:
        raise DataError(f"context of length {y.size} is shorter than the training series ({model.train_length})")
    p = model.params
    kind = model.kind
    if kind is ForecasterKind.AVG_GROWTH:
        return forecast_avg_growth(p, h, last_value=y[-1])
    if kind in (ForecasterKind.LINEAR, ForecasterKind.POLYNOMIAL):
        return forecast_regression(p, y.size - p.time_origin, h)
    if kind is ForecasterKind.HOLT:
        return forecast_holt(advance(p, y[model.train_length:]), h)
    return forecast_lstm(p, y, h)


# ---------------------------------------------------------------------------
# JSON snapshots

def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    return value


def model_to_dict(model: TrainedModel) -> dict:
    params = {k: _plain(getattr(model.params, k)) for k in model.params.__dataclass_fields__}
    return {
        "kind": model.kind.value,
        "train_length": model.train_length,
        "seed": model.seed,
        "config": model.config,
        "params": params,
    }


def model_from_dict(doc: dict) -> TrainedModel:
    kind = ForecasterKind(doc["kind"])
    raw = dict(doc["params"])
    if kind in (ForecasterKind.LINEAR, ForecasterKind.POLYNOMIAL):
        raw["coefficients"] = tuple(raw["coefficients"])
    if kind is ForecasterKind.LSTM:
        for k in ("U", "W", "b", "w_out"):
            raw[k] = np.asarray(raw[k], dtype=float)
    params = _PARAM_TYPES[kind](**raw)
    return TrainedModel(kind, params, int(doc["train_length"]), int(doc.get("seed", 0)), doc.get("config", {}))


__all__ = [
    "ALL_KINDS", "DEFAULT_LOOKBACK", "ForecasterKind", "GrowthParams", "HoltParams", "LstmParams",
    "LstmTrainConfig", "ModelConfig", "RegressionParams", "TrainedModel", "fit_avg_growth", "fit_holt",
    "fit_lstm", "fit_lstm_global", "fit_model", "fit_regression", "forecast_avg_growth", "forecast_holt",
    "forecast_lstm", "forecast_model", "forecast_regression", "lstm_forward", "model_from_dict",
    "model_to_dict",
]
