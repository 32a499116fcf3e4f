"""Shallow feed-forward regressor: inputs -> ReLU hidden layer -> linear output.

Trained on mean squared error with mini-batch SGD plus momentum.  A slice
of the training data is held out for early stopping and the weights with
the lowest validation loss are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DivergedLoss

DEFAULT_HIDDEN = 100


@dataclass(frozen=True, eq=False)
class NnEstimator:
    W1: np.ndarray  # (hidden, n_in)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (1, hidden)
    b2: np.ndarray  # (1,)
    validation_loss: float = math.nan
    epochs_run: int = 0

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def predict(self, X) -> np.ndarray:
        return forward(self.params(), np.atleast_2d(np.asarray(X, dtype=np.float64)))[0]

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}


def init_params(n_in: int, hidden: int, rng: np.random.Generator, zero_output: bool = False) -> dict:
    W1 = rng.normal(0.0, math.sqrt(2.0 / n_in), size=(hidden, n_in))
    b1 = np.zeros(hidden)
    if zero_output:
        W2 = np.zeros((1, hidden))
    else:
        W2 = rng.normal(0.0, math.sqrt(1.0 / hidden), size=(1, hidden))
    return {"W1": W1, "b1": b1, "W2": W2, "b2": np.zeros(1)}


def forward(params: dict, X: np.ndarray):
    Z = X @ params["W1"].T + params["b1"]
    H = np.maximum(Z, 0.0)
    out = H @ params["W2"][0] + params["b2"][0]
    return out, (Z, H)


def loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient w.r.t. every parameter."""
    out, (Z, H) = forward(params, X)
    r = out - y
    loss = float(np.mean(r * r))
    d_out = 2.0 * r / len(y)
    gW2 = (d_out @ H)[None, :]
    gb2 = np.array([d_out.sum()])
    dH = np.outer(d_out, params["W2"][0])
    dZ = dH * (Z > 0)
    gW1 = dZ.T @ X
    gb1 = dZ.sum(axis=0)
    return loss, {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


def fit_nn(
    X,
    y,
    hidden: int = DEFAULT_HIDDEN,
    epochs: int = 500,
    lr: float = 1e-3,
    momentum: float = 0.9,
    batch_size: int = 32,
    patience: int = 20,
    validation_fraction: float = 0.1,
    rng_seed: int = 0,
    zero_output: bool = False,
) -> NnEstimator:
    if hidden < 1:
        raise ConfigError("hidden must be >= 1")
    if epochs < 1 or batch_size < 1:
        raise ConfigError("epochs and batch_size must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(rng_seed)
    params = init_params(X.shape[1], hidden, rng, zero_output)

    n = len(y)
    n_val = int(round(validation_fraction * n)) if n >= 10 else 0
    perm = rng.permutation(n)
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    Xtr, ytr = X[tr_idx], y[tr_idx]
    Xval, yval = (X[val_idx], y[val_idx]) if n_val else (Xtr, ytr)

    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    best = {k: v.copy() for k, v in params.items()}
    best_loss = loss_and_grad(params, Xval, yval)[0]
    stale = 0
    epoch = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(ytr))
        for start in range(0, len(order), batch_size):
            b = order[start : start + batch_size]
            loss, grads = loss_and_grad(params, Xtr[b], ytr[b])
            if not math.isfinite(loss):
                raise DivergedLoss(f"non-finite training loss at epoch {epoch}")
            for k in params:
                velocity[k] = momentum * velocity[k] - lr * grads[k]
                params[k] = params[k] + velocity[k]
        val_loss = loss_and_grad(params, Xval, yval)[0]
        if not math.isfinite(val_loss):
            raise DivergedLoss(f"non-finite validation loss at epoch {epoch}")
        if val_loss < best_loss:
            best_loss = val_loss
            best = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return NnEstimator(best["W1"], best["b1"], best["W2"], best["b2"], float(best_loss), epoch)
