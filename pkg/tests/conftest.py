"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np
import pytest

from edms.models.lstm import LstmParams, init_params, loss_and_grad


def brute_force_cutoff(lengths):
    """Exhaustive maximizer of L * #{len >= L} over every integer L in [2, max]; ties to larger L."""
    best_l, best_total = None, -1
    for L in range(2, max(lengths) + 1):
        total = L * sum(1 for n in lengths if n >= L)
        if total >= best_total:
            best_l, best_total = L, total
    return best_l


def numeric_gradient(p: LstmParams, X, y, eps=1e-5, names=("U", "W", "w_out", "b_out", "b")):
    """Central finite differences of the training loss for each weight array."""
    out = {}
    for name in names:
        base = np.array(p.weights()[name], dtype=float)
        num = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            for sign in (1.0, -1.0):
                bumped = base.copy()
                bumped[idx] += sign * eps
                num[idx] += sign * loss_and_grad(p.with_weights(**{name: bumped}), X, y)[0] / (2 * eps)
        out[name] = num
    return out


def max_relative_error(analytic, numeric):
    worst = 0.0
    for name, num in numeric.items():
        a = np.asarray(analytic[name], dtype=float)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - num) / denom)))
    return worst


def random_lstm_instance(seed, hidden=3, window=5, batch=4, use_bias=False):
    """Random weights and data for gradient checks (weights drawn wider than the trainer's init)."""
    rng = np.random.default_rng(1000 + seed)
    p = init_params(hidden, window, seed, use_bias=use_bias)
    p = p.with_weights(
        U=rng.normal(size=4 * hidden),
        W=rng.normal(size=(hidden, 4 * hidden)),
        b=rng.normal(size=4 * hidden) if use_bias else np.zeros(4 * hidden),
        w_out=rng.normal(size=hidden),
        b_out=rng.normal(),
    )
    return p, rng.normal(size=(batch, window)), rng.normal(size=batch)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
