"""Synthetic panels standing in for real indicator data.

All generators produce strictly positive series so that every ensemble
member (including the growth-ratio model) and the forecast-denominated MAPE
are well defined.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .timeseries import Series, period_index, parse_date, write_panel_csv

KINDS = ("affine", "trend_break", "ar1", "geometric")

_START = {"annual": "1960", "quarterly": "1990-01", "monthly": "1995-01", "daily": "2020-01-01"}


def affine(n: int, rng: np.random.Generator) -> np.ndarray:
    intercept = rng.uniform(50.0, 150.0)
    slope = rng.uniform(0.2, 2.0)
    return intercept + slope * np.arange(n, dtype=float)


def trend_break(n: int, rng: np.random.Generator, break_frac: float | None = None,
                noise: float = 0.5) -> np.ndarray:
    """Piecewise-linear trend whose slope changes once, plus Gaussian noise."""
    t = np.arange(n, dtype=float)
    tb = int(n * (break_frac if break_frac is not None else rng.uniform(0.55, 0.75)))
    s1 = rng.uniform(0.2, 1.0)
    s2 = s1 * rng.uniform(-0.8, 2.5)
    trend = 100.0 + s1 * t + (s2 - s1) * np.clip(t - tb, 0.0, None)
    y = trend + noise * rng.standard_normal(n)
    # keep the series comfortably positive
    floor = 10.0 - y.min()
    return y + max(floor, 0.0)


def ar1(n: int, rng: np.random.Generator, phi: float = 0.7, mean: float = 100.0,
        sigma: float = 1.0) -> np.ndarray:
    y = np.empty(n)
    y[0] = mean + sigma / np.sqrt(1 - phi ** 2) * rng.standard_normal()
    for k in range(1, n):
        y[k] = mean + phi * (y[k - 1] - mean) + sigma * rng.standard_normal()
    return y


def geometric(n: int, rng: np.random.Generator, noise: float = 0.005) -> np.ndarray:
    growth = rng.uniform(1.002, 1.02)
    shocks = np.exp(noise * rng.standard_normal(n))
    return rng.uniform(20.0, 80.0) * growth ** np.arange(n) * shocks


GENERATORS = {"affine": affine, "trend_break": trend_break, "ar1": ar1, "geometric": geometric}


def synth_panel(kind: str, n_series: int, length: int, frequency: str = "annual", seed: int = 0,
                **kwargs) -> list:
    """``n_series`` independent series of one kind, ids ``<kind>_<k>``."""
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; choose from {KINDS}")
    start = period_index(parse_date(_START[frequency]), frequency)
    children = np.random.SeedSequence(seed).spawn(n_series)
    return [
        Series(f"{kind}_{k}", GENERATORS[kind](length, np.random.default_rng(child), **kwargs), frequency, start)
        for k, child in enumerate(children)
    ]


# (kind, frequency, n_series, length)
SUITE = (
    ("affine", "annual", 2, 60),
    ("trend_break", "quarterly", 3, 120),
    ("ar1", "monthly", 3, 240),
    ("geometric", "annual", 2, 80),
)


def write_suite(out_dir, seed: int = 0) -> Path:
    """Write the bundled synthetic datasets plus a ready-to-run config; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# bundled synthetic suite", "datasets:"]
    for k, (kind, freq, n_series, length) in enumerate(SUITE):
        series = synth_panel(kind, n_series, length, freq, seed=seed + k)
        write_panel_csv(out / f"{kind}.csv", series)
        lines += [f"  - path: {kind}.csv", f"    label: {kind}", f"    frequency: {freq}"]
    lines += [f"seed: {seed}", "test_fraction: 0.2", "output_dir: runs", ""]
    config = out / "suite.yaml"
    config.write_text("\n".join(lines), encoding="utf-8")
    return config
