"""Least-squares trend regression (linear and quadratic in time)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SeriesTooShort


@dataclass(frozen=True)
class RegressionParams:
    coefficients: tuple  # intercept first
    degree: int
    time_origin: int = 0

    def __post_init__(self):
        if len(self.coefficients) != self.degree + 1:
            raise ValueError("coefficient count must equal degree + 1")


def design_matrix(t, degree: int) -> np.ndarray:
    return np.vander(np.asarray(t, dtype=float), degree + 1, increasing=True)


def fit_regression(values, degree: int, time_origin: int = 0) -> RegressionParams:
    y = np.asarray(values, dtype=float)
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    if y.size < degree + 2:
        raise SeriesTooShort(f"degree-{degree} regression needs at least {degree + 2} points")
    X = design_matrix(np.arange(y.size), degree)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return RegressionParams(tuple(float(b) for b in beta), degree, int(time_origin))


def evaluate(params: RegressionParams, t) -> np.ndarray:
    return design_matrix(t, params.degree) @ np.asarray(params.coefficients)


def forecast_regression(params: RegressionParams, n: int, h: int) -> np.ndarray:
    """Evaluate the fitted polynomial at ``t = n, ..., n + h - 1`` (``n`` = points seen)."""
    return evaluate(params, np.arange(n, n + h))
