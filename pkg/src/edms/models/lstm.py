"""Single-layer LSTM forecaster written directly in numpy.

Gate equations (no biases unless ``use_bias`` is set)::

    f_t  = sigmoid(y_t U_f + h_t W_f)
    C~_t = tanh(y_t U_C + h_t W_C)
    i_t  = sigmoid(y_t U_i + h_t W_i)
    C_t  = i_t * C~_t + f_t * C_{t-1}
    o_t  = sigmoid(y_t U_o + h_t W_o)
    h_t+1 = o_t * tanh(C_t)

A linear read-out ``h . w_out + b_out`` maps the last hidden output to a
scalar one-step forecast in normalized units. The four gates are stored
packed along the last axis in the order (f, i, C, o).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DivergedLoss, SeriesTooShort, ShapeMismatch

GATES = ("f", "i", "C", "o")
DEFAULT_LOOKBACK = {"annual": 4, "quarterly": 8, "monthly": 12, "daily": 20}
WEIGHT_NAMES = ("U", "W", "b", "w_out", "b_out")


@dataclass(frozen=True)
class LstmTrainConfig:
    hidden_size: int = 16
    lookback: int = 4
    epochs: int = 200
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    use_bias: bool = False
    seed: int = 0


@dataclass(frozen=True, eq=False)
class LstmParams:
    hidden_size: int
    lookback: int
    U: np.ndarray       # (4H,)   input-to-hidden, gates packed
    W: np.ndarray       # (H, 4H) hidden-to-hidden, gates packed
    b: np.ndarray       # (4H,)   zero and frozen unless use_bias
    w_out: np.ndarray   # (H,)
    b_out: float
    mean: float = 0.0
    scale: float = 1.0
    seed: int = 0
    use_bias: bool = False
    loss_first: float = float("nan")
    loss_last: float = float("nan")
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        H = self.hidden_size
        shapes = {"U": (4 * H,), "W": (H, 4 * H), "b": (4 * H,), "w_out": (H,)}
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)
        if not self.scale > 0:
            raise ValueError("normalization scale must be positive")

    def gate(self, matrix: str, gate: str) -> np.ndarray:
        """Slice one gate's block out of the packed ``U`` or ``W``."""
        k = GATES.index(gate)
        H = self.hidden_size
        return getattr(self, matrix)[..., k * H:(k + 1) * H]

    U_f = property(lambda self: self.gate("U", "f"))
    W_f = property(lambda self: self.gate("W", "f"))
    U_i = property(lambda self: self.gate("U", "i"))
    W_i = property(lambda self: self.gate("W", "i"))
    U_C = property(lambda self: self.gate("U", "C"))
    W_C = property(lambda self: self.gate("W", "C"))
    U_o = property(lambda self: self.gate("U", "o"))
    W_o = property(lambda self: self.gate("W", "o"))

    def weights(self) -> dict:
        return {"U": self.U, "W": self.W, "b": self.b, "w_out": self.w_out, "b_out": np.array(self.b_out)}

    def with_weights(self, **kw) -> "LstmParams":
        if "b_out" in kw:
            kw["b_out"] = float(kw["b_out"])
        return replace(self, **kw)

    def normalize(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.scale

    def denormalize(self, z):
        return np.asarray(z) * self.scale + self.mean


def init_params(hidden_size: int, lookback: int, seed: int, use_bias: bool = False) -> LstmParams:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) initialization; biases start at zero."""
    rng = np.random.default_rng(seed)
    H = hidden_size
    r = 1.0 / np.sqrt(H)
    return LstmParams(
        hidden_size=H,
        lookback=lookback,
        U=rng.uniform(-r, r, 4 * H),
        W=rng.uniform(-r, r, (H, 4 * H)),
        b=np.zeros(4 * H),
        w_out=rng.uniform(-r, r, H),
        b_out=0.0,
        seed=seed,
        use_bias=use_bias,
    )


def _gate_affine(H):
    """Per-column constants so one tanh call evaluates all four gates.

    sigmoid(x) = 0.5 + 0.5 * tanh(x / 2); the candidate block is a plain tanh.
    """
    inner = np.full(4 * H, 0.5)
    outer = np.full(4 * H, 0.5)
    shift = np.full(4 * H, 0.5)
    inner[2 * H:3 * H] = 1.0
    outer[2 * H:3 * H] = 1.0
    shift[2 * H:3 * H] = 0.0
    return inner, outer, shift


def _forward(p: LstmParams, X: np.ndarray, keep_cache: bool = False):
    """Batched forward pass over windows ``X`` of shape (B, T), normalized units."""
    B, T = X.shape
    H = p.hidden_size
    inner, outer, shift = _gate_affine(H)
    U, W = p.U * inner, p.W * inner
    b = p.b * inner if p.use_bias else None
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = [] if keep_cache else None
    for t in range(T):
        a = np.multiply.outer(X[:, t], U)
        a += h @ W
        if b is not None:
            a += b
        gates = np.tanh(a)
        gates *= outer
        gates += shift
        f, i, g, o = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:3 * H], gates[:, 3 * H:]
        c_prev, h_prev = c, h
        c = i * g + f * c_prev
        tc = np.tanh(c)
        h = o * tc
        if keep_cache:
            cache.append((h_prev, c_prev, gates, tc))
    pred = h @ p.w_out + p.b_out
    return pred, h, c, cache


def loss_and_grad(p: LstmParams, X, y):
    """Mean squared error over windows and its exact gradient by backpropagation through time."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    B, T = X.shape
    H = p.hidden_size
    pred, h_last, _, cache = _forward(p, X, keep_cache=True)
    err = pred - y
    loss = float(np.mean(err ** 2))

    dpred = 2.0 * err / B
    grads = {
        "w_out": h_last.T @ dpred,
        "b_out": np.array(dpred.sum()),
        "U": np.zeros_like(p.U),
        "W": np.zeros_like(p.W),
        "b": np.zeros_like(p.b),
    }
    dh = np.outer(dpred, p.w_out)
    dc = np.zeros((B, H))
    dgates = np.empty((B, 4 * H))
    # derivative of each gate activation w.r.t. its pre-activation
    sig = np.ones(4 * H, dtype=bool)
    sig[2 * H:3 * H] = False
    for t in range(T - 1, -1, -1):
        h_prev, c_prev, gates, tc = cache[t]
        f, i, g, o = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:3 * H], gates[:, 3 * H:]
        dc += dh * o * (1.0 - tc * tc)
        dgates[:, :H] = dc * c_prev
        dgates[:, H:2 * H] = dc * g
        dgates[:, 2 * H:3 * H] = dc * i
        dgates[:, 3 * H:] = dh * tc
        da = np.where(sig, gates * (1.0 - gates), 1.0 - gates * gates)
        da *= dgates
        grads["U"] += X[:, t] @ da
        grads["W"] += h_prev.T @ da
        grads["b"] += da.sum(axis=0)
        dh = da @ p.W.T
        dc = dc * f
    if not p.use_bias:
        grads["b"][:] = 0.0
    return loss, grads


def make_windows(z, lookback: int):
    z = np.asarray(z, dtype=float)
    n = z.size - lookback
    idx = np.arange(lookback)[None, :] + np.arange(n)[:, None]
    return z[idx], z[lookback:]


def _normalization(values):
    y = np.asarray(values, dtype=float)
    mean = float(np.mean(y))
    std = float(np.std(y))
    # a flat series has no spread to scale by
    scale = std if std > 1e-12 * max(1.0, abs(mean)) else 1.0
    return mean, scale


def _train(p: LstmParams, X, y, cfg: LstmTrainConfig) -> LstmParams:
    names = ("U", "W", "b", "w_out", "b_out") if cfg.use_bias else ("U", "W", "w_out", "b_out")
    theta = {k: np.array(v, dtype=float) for k, v in p.weights().items()}
    m = {k: np.zeros_like(theta[k]) for k in names}
    v = {k: np.zeros_like(theta[k]) for k in names}
    first = last = float("nan")
    for epoch in range(1, cfg.epochs + 1):
        loss, grads = loss_and_grad(p, X, y)
        if not np.isfinite(loss):
            raise DivergedLoss(f"training loss became {loss} at epoch {epoch}")
        if epoch == 1:
            first = loss
        for k in names:
            m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * grads[k]
            v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * grads[k] ** 2
            m_hat = m[k] / (1 - cfg.beta1 ** epoch)
            v_hat = v[k] / (1 - cfg.beta2 ** epoch)
            theta[k] = theta[k] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        p = p.with_weights(**theta)
    last = loss_and_grad(p, X, y)[0] if cfg.epochs else float("nan")
    if not np.isfinite(last):
        raise DivergedLoss(f"final training loss is {last}")
    return replace(p, loss_first=first, loss_last=last)


def fit_lstm(values, cfg: LstmTrainConfig = LstmTrainConfig()) -> LstmParams:
    """Train on one series: z-score it, cut supervised windows, run full-batch Adam."""
    y = np.asarray(values, dtype=float)
    if y.size < cfg.lookback + 2:
        raise SeriesTooShort(f"LSTM with lookback {cfg.lookback} needs at least {cfg.lookback + 2} points")
    mean, scale = _normalization(y)
    X, t = make_windows((y - mean) / scale, cfg.lookback)
    p = init_params(cfg.hidden_size, cfg.lookback, cfg.seed, cfg.use_bias)
    p = replace(p, mean=mean, scale=scale, config=_config_dict(cfg))
    return _train(p, X, t, cfg)


def fit_lstm_global(panel_values, cfg: LstmTrainConfig = LstmTrainConfig()) -> list:
    """Train one network on windows pooled from several series.

    Each series keeps its own normalization; the returned list holds one
    parameter record per input series sharing the trained weights.
    """
    norms, Xs, ts = [], [], []
    for values in panel_values:
        y = np.asarray(values, dtype=float)
        if y.size < cfg.lookback + 2:
            raise SeriesTooShort(f"LSTM with lookback {cfg.lookback} needs at least {cfg.lookback + 2} points")
        mean, scale = _normalization(y)
        X, t = make_windows((y - mean) / scale, cfg.lookback)
        norms.append((mean, scale))
        Xs.append(X)
        ts.append(t)
    p = init_params(cfg.hidden_size, cfg.lookback, cfg.seed, cfg.use_bias)
    p = replace(p, config=_config_dict(cfg))
    p = _train(p, np.vstack(Xs), np.concatenate(ts), cfg)
    return [replace(p, mean=mean, scale=scale) for mean, scale in norms]


def _config_dict(cfg: LstmTrainConfig) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


def lstm_forward(p: LstmParams, window):
    """One pass over a normalized window.

    Returns the de-normalized scalar prediction and the final cell state.
    """
    window = np.asarray(window, dtype=float)
    if window.shape != (p.lookback,):
        raise ShapeMismatch(f"window has shape {window.shape}, expected ({p.lookback},)")
    pred, _, c, _ = _forward(p, window[None, :])
    return float(p.denormalize(pred[0])), c[0]


def forecast_lstm(p: LstmParams, context, h: int) -> np.ndarray:
    """Roll one-step predictions forward, feeding each back into the next window."""
    context = np.asarray(context, dtype=float)
    if context.size < p.lookback:
        raise SeriesTooShort(f"context shorter than lookback {p.lookback}")
    window = list(p.normalize(context[-p.lookback:]))
    out = np.empty(h)
    for k in range(h):
        pred, _, _, _ = _forward(p, np.asarray(window)[None, :])
        out[k] = pred[0]
        window = window[1:] + [float(pred[0])]
    return p.denormalize(out)
