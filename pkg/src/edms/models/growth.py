"""Average growth rate forecaster."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveValue, SeriesTooShort


@dataclass(frozen=True)
class GrowthParams:
    g: float
    last_value: float
    additive: bool = False


def fit_avg_growth(values, additive: bool = False) -> GrowthParams:
    """Mean period-over-period growth of the training values.

    The default is multiplicative (mean of ``y_t / y_{t-1}``), so a forecast
    compounds the last observation. ``additive=True`` averages first
    differences instead and forecasts ``y_N + h * g``.
    """
    y = np.asarray(values, dtype=float)
    if y.size < 2:
        raise SeriesTooShort("average growth needs at least 2 observations")
    if additive:
        return GrowthParams(float(np.mean(np.diff(y))), float(y[-1]), True)
    if np.any(y <= 0):
        raise NonPositiveValue("growth ratios need strictly positive values")
    return GrowthParams(float(np.mean(y[1:] / y[:-1])), float(y[-1]))


def forecast_avg_growth(params: GrowthParams, h: int, last_value: float | None = None) -> np.ndarray:
    last = params.last_value if last_value is None else float(last_value)
    k = np.arange(1, h + 1, dtype=float)
    if params.additive:
        return last + k * params.g
    return last * params.g ** k
