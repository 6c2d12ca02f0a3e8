"""Holt's additive-trend exponential smoothing with a grid-searched fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SeriesTooShort

GRID = np.round(np.arange(1, 100) / 100.0, 2)
FINE_STEP = 0.001
FINE_LO, FINE_HI = 0.001, 0.999


@dataclass(frozen=True)
class HoltParams:
    alpha: float
    gamma: float
    level: float
    trend: float
    rss: float = 0.0


def holt_filter(y, alpha, gamma):
    """Run the level/trend recursions.

    ``alpha`` and ``gamma`` may be arrays of equal shape, in which case all
    parameter pairs are filtered at once. Returns ``(level, trend, rss)``
    where ``rss`` sums squared one-step errors over ``t = 2..N``.
    """
    y = np.asarray(y, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    level = np.full(alpha.shape, y[0])
    trend = np.full(alpha.shape, y[1] - y[0])
    rss = np.zeros(alpha.shape)
    for t in range(1, y.size):
        pred = level + trend
        rss += (y[t] - pred) ** 2
        new_level = alpha * y[t] + (1.0 - alpha) * pred
        trend = gamma * (new_level - level) + (1.0 - gamma) * trend
        level = new_level
    return level, trend, rss


def _refine(y, alpha, gamma, best):
    """Coordinate descent on a 0.001 lattice, one axis at a time, until no move helps."""
    offsets = np.arange(-10, 11) * FINE_STEP
    while True:
        moved = False
        for axis in (0, 1):
            centre = alpha if axis == 0 else gamma
            cand = np.round(np.clip(centre + offsets, FINE_LO, FINE_HI), 3)
            a = cand if axis == 0 else np.full(cand.shape, alpha)
            g = cand if axis == 1 else np.full(cand.shape, gamma)
            rss = holt_filter(y, a, g)[2]
            k = int(np.argmin(rss))
            if rss[k] < best:
                best, moved = float(rss[k]), True
                alpha, gamma = float(a[k]), float(g[k])
        if not moved:
            return alpha, gamma, best


def fit_holt(values) -> HoltParams:
    y = np.asarray(values, dtype=float)
    if y.size < 3:
        raise SeriesTooShort("Holt needs at least 3 observations")
    aa, gg = np.meshgrid(GRID, GRID, indexing="ij")
    rss = holt_filter(y, aa.ravel(), gg.ravel())[2]
    k = int(np.argmin(rss))
    alpha, gamma, best = _refine(y, float(aa.ravel()[k]), float(gg.ravel()[k]), float(rss[k]))
    level, trend, rss = holt_filter(y, alpha, gamma)
    return HoltParams(alpha, gamma, float(level), float(trend), float(rss))


def forecast_holt(params: HoltParams, h: int) -> np.ndarray:
    return params.level + np.arange(1, h + 1, dtype=float) * params.trend


def advance(params: HoltParams, new_values) -> HoltParams:
    """Update level and trend over observations appended after the fit, keeping the smoothing constants."""
    level, trend = params.level, params.trend
    for v in np.asarray(new_values, dtype=float):
        new_level = params.alpha * v + (1.0 - params.alpha) * (level + trend)
        trend = params.gamma * (new_level - level) + (1.0 - params.gamma) * trend
        level = new_level
    return HoltParams(params.alpha, params.gamma, float(level), float(trend), params.rss)
