"""Two-layer LSTM forecaster of next-interval total deployment memory.

Inputs are windows of ``(total_mem_mib, pod_count)`` rows, 20 scrapes long.
The network (2 -> LSTM 32 -> LSTM 16 -> dense 1) works in standardized
units; the output is mapped back to MiB with the memory feature's scaler.

Forward and backward passes are written out in numpy and batched over
windows.  Gates are packed ``[input, forget, cell, output]`` along the last
axis of each weight matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Params = dict[str, np.ndarray]

LOOKBACK = 20
HORIZON = 15
N_FEATURES = 2
HIDDEN = (32, 16)
LSTM_TENSORS = ("Wx1", "Wh1", "b1", "Wx2", "Wh2", "b2", "Wo", "bo")
STD_FLOOR = 1e-8


class EmptyDataset(ValueError):
    pass


class BadWindowLength(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean

    def transform_target(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.mean[0]) / self.std[0]

    def inverse_target(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std[0] + self.mean[0]


@dataclass(frozen=True)
class ForecastResult:
    predicted_total_mem_mib: float
    horizon: int = HORIZON
    confidence: float = 1.0


def fit_scaler(rows: Sequence[Sequence[float]]) -> Scaler:
    """Per-feature mean and population std (floored) over ``rows``."""
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise EmptyDataset("cannot fit a scaler on no data")
    data = data.reshape(-1, data.shape[-1])
    return Scaler(mean=data.mean(axis=0), std=np.maximum(data.std(axis=0), STD_FLOOR))


def init_params(rng: np.random.Generator, forget_bias: float = 1.0) -> Params:
    def uni(fan_in, shape):
        k = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-k, k, shape)

    h1, h2 = HIDDEN
    p = {
        "Wx1": uni(N_FEATURES, (N_FEATURES, 4 * h1)),
        "Wh1": uni(h1, (h1, 4 * h1)),
        "b1": uni(h1, 4 * h1),
        "Wx2": uni(h1, (h1, 4 * h2)),
        "Wh2": uni(h2, (h2, 4 * h2)),
        "b2": uni(h2, 4 * h2),
        "Wo": uni(h2, (h2, 1)),
        "bo": uni(h2, 1),
    }
    p["b1"][h1:2 * h1] = forget_bias
    p["b2"][h2:2 * h2] = forget_bias
    return p


def zero_params() -> Params:
    h1, h2 = HIDDEN
    return {
        "Wx1": np.zeros((N_FEATURES, 4 * h1)), "Wh1": np.zeros((h1, 4 * h1)), "b1": np.zeros(4 * h1),
        "Wx2": np.zeros((h1, 4 * h2)), "Wh2": np.zeros((h2, 4 * h2)), "b2": np.zeros(4 * h2),
        "Wo": np.zeros((h2, 1)), "bo": np.zeros(1),
    }


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _layer_forward(x, Wx, Wh, b):
    """x: (B, T, D) -> hidden states (B, T, H) and a cache for backprop."""
    B, T, _ = x.shape
    H = Wh.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    cache = []
    xw = x @ Wx + b
    for t in range(T):
        z = xw[:, t] + h @ Wh
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        cache.append((h_prev, c_prev, i, f, g, o, tc))
    return hs, cache


def _layer_backward(x, Wx, Wh, cache, dhs):
    """Backprop through time given dL/dh_t for every step; returns (dx, dWx, dWh, db)."""
    B, T, _ = x.shape
    H = Wh.shape[0]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * H)
    dx = np.empty_like(x)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        h_prev, c_prev, i, f, g, o, tc = cache[t]
        dh = dhs[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            dh * tc * o * (1.0 - o),
        ], axis=1)
        dWx += x[:, t].T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dx[:, t] = dz @ Wx.T
        dh_next = dz @ Wh.T
        dc_next = dc * f
    return dx, dWx, dWh, db


def _net_forward(p: Params, xs: np.ndarray):
    h1s, c1 = _layer_forward(xs, p["Wx1"], p["Wh1"], p["b1"])
    h2s, c2 = _layer_forward(h1s, p["Wx2"], p["Wh2"], p["b2"])
    y = h2s[:, -1] @ p["Wo"] + p["bo"]
    return y[:, 0], (xs, h1s, c1, h2s, c2)


def loss_and_grads(p: Params, xs: np.ndarray, ys: np.ndarray) -> tuple[float, Params]:
    """Mean squared error in standardized space and its gradient for every tensor."""
    pred, (xs, h1s, c1, h2s, c2) = _net_forward(p, xs)
    err = pred - ys
    loss = float(np.mean(err * err))
    dy = (2.0 / len(ys)) * err[:, None]
    g = {"Wo": h2s[:, -1].T @ dy, "bo": dy.sum(axis=0)}
    dh2 = np.zeros_like(h2s)
    dh2[:, -1] = dy @ p["Wo"].T
    dh1, g["Wx2"], g["Wh2"], g["b2"] = _layer_backward(h1s, p["Wx2"], p["Wh2"], c2, dh2)
    _, g["Wx1"], g["Wh1"], g["b1"] = _layer_backward(xs, p["Wx1"], p["Wh1"], c1, dh1)
    return loss, g


def _loss(p: Params, xs: np.ndarray, ys: np.ndarray) -> float:
    pred = _net_forward(p, xs)[0]
    return float(np.mean((pred - ys) ** 2))


def _check_window(window) -> np.ndarray:
    w = np.asarray(window, dtype=float)
    if w.ndim != 2 or w.shape != (LOOKBACK, N_FEATURES):
        raise BadWindowLength(f"expected a {LOOKBACK}x{N_FEATURES} window, got shape {w.shape}")
    return w


def predict_batch(p: Params, scaler: Scaler, windows: np.ndarray) -> np.ndarray:
    """Predicted total memory (MiB, clamped at 0) for a (B, 20, 2) stack of windows."""
    out = _net_forward(p, scaler.transform(windows))[0]
    return np.maximum(scaler.inverse_target(out), 0.0)


def forward(p: Params, scaler: Scaler, window, confidence: float = 1.0) -> ForecastResult:
    w = _check_window(window)
    value = float(predict_batch(p, scaler, w[None])[0])
    return ForecastResult(predicted_total_mem_mib=value, horizon=HORIZON, confidence=confidence)


def clip_by_global_norm(grads: Params, max_norm: float) -> Params:
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm <= max_norm or norm == 0.0:
        return grads
    return {k: g * (max_norm / norm) for k, g in grads.items()}


def train(p: Params, scaler: Scaler, dataset: Sequence[tuple[np.ndarray, float]], epochs: int,
          lr: float = 1e-3, clip_norm: float = 5.0) -> tuple[Params, list[float]]:
    """Full-batch gradient descent with gradient-norm clipping.

    Returns the trained parameters and the loss recorded before each epoch's
    update.  The input parameters are not modified.
    """
    if len(dataset) == 0:
        raise EmptyDataset("no training windows")
    xs = scaler.transform(np.stack([_check_window(w) for w, _ in dataset]))
    ys = scaler.transform_target([y for _, y in dataset])
    p = {k: v.copy() for k, v in p.items()}
    losses = []
    for _ in range(epochs):
        loss, grads = loss_and_grads(p, xs, ys)
        losses.append(loss)
        if lr == 0.0:
            continue
        grads = clip_by_global_norm(grads, clip_norm)
        for k in p:
            p[k] -= lr * grads[k]
    return p, losses


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na < floor and nb < floor:
        return 0.0
    return float(np.linalg.norm(a - b)) / max(na, nb)


def grad_check(p: Params, scaler: Scaler, sample: tuple[np.ndarray, float], step: float = 1e-5,
               max_entries: int | None = 48, seed: int = 0,
               grad_fn: Callable[[Params, np.ndarray, np.ndarray], Params] | None = None) -> float:
    """Worst per-tensor relative error of analytic vs central-difference gradients.

    Each tensor is probed at up to ``max_entries`` seeded positions (every
    entry when ``max_entries`` is None or the tensor is small enough).
    """
    window, target = sample
    xs = scaler.transform(_check_window(window)[None])
    ys = scaler.transform_target([target])
    analytic = (grad_fn or (lambda q, x, y: loss_and_grads(q, x, y)[1]))(p, xs, ys)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in LSTM_TENSORS:
        theta = p[name].reshape(-1)  # a view, so edits reach the loss
        n = theta.size
        idx = np.arange(n) if max_entries is None or n <= max_entries else \
            np.sort(rng.choice(n, max_entries, replace=False))
        numeric = np.empty(len(idx))
        for j, k in enumerate(idx):
            orig = theta[k]
            theta[k] = orig + step
            up = _loss(p, xs, ys)
            theta[k] = orig - step
            down = _loss(p, xs, ys)
            theta[k] = orig
            numeric[j] = (up - down) / (2 * step)
        worst = max(worst, relative_error(analytic[name].reshape(-1)[idx], numeric))
    return worst


def mape(predictions: Sequence[float], actuals: Sequence[float]) -> float:
    """Mean absolute percentage error, skipping actuals under 1 MiB in magnitude."""
    pred = np.asarray(predictions, dtype=float)
    act = np.asarray(actuals, dtype=float)
    if pred.shape != act.shape or pred.size == 0:
        raise EmptyInput("need equal-length, non-empty predictions and actuals")
    keep = np.abs(act) >= 1.0
    if not keep.any():
        raise EmptyInput("every actual value is below 1 MiB")
    return float(np.mean(np.abs(pred[keep] - act[keep]) / np.abs(act[keep])) * 100.0)


def r2_score(predictions: Sequence[float], actuals: Sequence[float]) -> float:
    pred = np.asarray(predictions, dtype=float)
    act = np.asarray(actuals, dtype=float)
    ss_res = float(((act - pred) ** 2).sum())
    ss_tot = float(((act - act.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0


def confidence(recent_residual_mape: float) -> float:
    return float(min(max(1.0 - recent_residual_mape / 100.0, 0.0), 1.0))


def make_windows(series: np.ndarray, lookback: int = LOOKBACK) -> list[tuple[np.ndarray, float]]:
    """Slide over a (T, 2) series; each window is paired with the next step's memory."""
    series = np.asarray(series, dtype=float)
    return [(series[i:i + lookback], float(series[i + lookback, 0]))
            for i in range(len(series) - lookback)]


@dataclass
class Forecaster:
    """Trained parameters plus the scaler they were fitted with."""

    params: Params
    scaler: Scaler

    def predict(self, window, confidence: float = 1.0) -> ForecastResult:
        return forward(self.params, self.scaler, window, confidence)

    def predict_many(self, windows) -> np.ndarray:
        return predict_batch(self.params, self.scaler, np.asarray(windows, dtype=float))
