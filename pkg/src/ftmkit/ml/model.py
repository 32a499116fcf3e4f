"""Trained distance estimators over ``(rtt_raw, mean_rssi)``.

Every model carries the normalizer and target scaling it was trained with.
:func:`predict` only applies them and never refits.  Two target modes are
supported:

``absolute``
    the model regresses the true distance directly (default);
``correction``
    it regresses ``true - distance_from_rtt(rtt_raw)`` and the raw distance
    is added back at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

from ..core import LabeledSample, samples_to_arrays
from ..correction import distance_from_rtt
from ..errors import ConfigError, UnsupportedVariant
from .gp import DEFAULT_MAX_POINTS, GpEstimator, fit_gp, subsample_indices
from .kernels import TABLE_I_EXPONENTIAL, KernelParams
from .nn import DEFAULT_HIDDEN, NnEstimator, fit_nn
from .normalize import Normalizer, fit_normalizer_arrays, target_scale
from .svr import DEFAULT_C, DEFAULT_EPSILON, SvrEstimator, fit_svr
from .tree import TreeEstimator, fit_tree

VARIANTS = ("tree", "svr", "gp", "nn")
TARGET_MODES = ("absolute", "correction")

Estimator = Union[TreeEstimator, SvrEstimator, GpEstimator, NnEstimator]


@dataclass(frozen=True, eq=False)
class TrainedModel:
    variant: str
    normalizer: Normalizer
    estimator: Estimator
    target_mean: float = 0.0
    target_std: float = 1.0
    target_mode: str = "absolute"
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UnsupportedVariant(self.variant)
        if self.target_mode not in TARGET_MODES:
            raise ConfigError(f"target_mode must be one of {TARGET_MODES}")

    def predict_array(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = self.estimator.predict(self.normalizer.transform(X))
        out = z * self.target_std + self.target_mean
        if self.target_mode == "correction":
            out = out + distance_from_rtt(X[:, 0])
        return np.maximum(out, 0.0)


def predict(model: TrainedModel, rtt_raw: float, mean_rssi: float) -> float:
    """Estimated distance in meters, clamped at zero."""
    return float(model.predict_array([[rtt_raw, mean_rssi]])[0])


def _prepare(samples: Sequence[LabeledSample], target_mode: str):
    if target_mode not in TARGET_MODES:
        raise ConfigError(f"target_mode must be one of {TARGET_MODES}")
    X, y = samples_to_arrays(samples)
    norm = fit_normalizer_arrays(X)
    if target_mode == "correction":
        y = y - distance_from_rtt(X[:, 0])
    t_mean, t_std = target_scale(y)
    return X, norm, norm.transform(X), (y - t_mean) / t_std, t_mean, t_std


def train_tree(train: Sequence[LabeledSample], min_leaf_size: int = 4, target_mode: str = "absolute") -> TrainedModel:
    _, norm, Xn, yn, tm, ts = _prepare(train, target_mode)
    est = fit_tree(Xn, yn, min_leaf_size)
    return TrainedModel("tree", norm, est, tm, ts, target_mode, {"min_leaf_size": int(min_leaf_size)})


def train_svr(
    train: Sequence[LabeledSample],
    C: float = DEFAULT_C,
    epsilon: float = DEFAULT_EPSILON,
    kernel: KernelParams = KernelParams("gaussian"),
    target_mode: str = "absolute",
    tol: float = 1e-3,
    max_iterations: int = 1_000_000,
) -> TrainedModel:
    _, norm, Xn, yn, tm, ts = _prepare(train, target_mode)
    est = fit_svr(Xn, yn, C, epsilon, kernel, tol, max_iterations)
    hp = {"C": float(C), "epsilon": float(epsilon), "sigma_l": kernel.sigma_l}
    return TrainedModel("svr", norm, est, tm, ts, target_mode, hp)


def train_gp(
    train: Sequence[LabeledSample],
    p: KernelParams = TABLE_I_EXPONENTIAL,
    max_points: int = DEFAULT_MAX_POINTS,
    rng_seed: int = 0,
    target_mode: str = "absolute",
) -> TrainedModel:
    """Exact GP on at most ``max_points`` samples (seeded subsample)."""
    train = list(train)
    keep = subsample_indices(len(train), max_points, rng_seed)
    train = [train[i] for i in keep]
    _, norm, Xn, yn, tm, ts = _prepare(train, target_mode)
    est = fit_gp(Xn, yn, p)
    hp = {"kind": p.kind, "sigma_f": p.sigma_f, "sigma_l": p.sigma_l, "noise_sigma": p.noise_sigma}
    return TrainedModel("gp", norm, est, tm, ts, target_mode, hp)


def train_nn(
    train: Sequence[LabeledSample],
    hidden: int = DEFAULT_HIDDEN,
    epochs: int = 500,
    lr: float = 1e-3,
    rng_seed: int = 0,
    target_mode: str = "absolute",
    **kwargs,
) -> TrainedModel:
    _, norm, Xn, yn, tm, ts = _prepare(train, target_mode)
    est = fit_nn(Xn, yn, hidden=hidden, epochs=epochs, lr=lr, rng_seed=rng_seed, **kwargs)
    hp = {"hidden": int(hidden), "epochs": int(epochs), "lr": float(lr), **kwargs}
    return TrainedModel("nn", norm, est, tm, ts, target_mode, hp)


def train(
    variant: str,
    samples: Sequence[LabeledSample],
    hyperparameters: dict[str, Any] | None = None,
    rng_seed: int = 0,
    target_mode: str = "absolute",
) -> TrainedModel:
    """Dispatch by variant name with a flat hyperparameter dict."""
    hp = dict(hyperparameters or {})
    try:
        if variant == "tree":
            return train_tree(samples, int(hp.pop("min_leaf_size", 4)), target_mode, **hp)
        if variant == "svr":
            kernel = KernelParams("gaussian", 1.0, float(hp.pop("sigma_l", 1.0)))
            return train_svr(samples, kernel=kernel, target_mode=target_mode, **hp)
        if variant == "gp":
            kernel = KernelParams(
                hp.pop("kind", TABLE_I_EXPONENTIAL.kind),
                float(hp.pop("sigma_f", TABLE_I_EXPONENTIAL.sigma_f)),
                float(hp.pop("sigma_l", TABLE_I_EXPONENTIAL.sigma_l)),
                float(hp.pop("noise_sigma", TABLE_I_EXPONENTIAL.noise_sigma)),
            )
            return train_gp(samples, kernel, rng_seed=rng_seed, target_mode=target_mode, **hp)
        if variant == "nn":
            if "hidden" in hp:
                hp["hidden"] = int(hp["hidden"])
            return train_nn(samples, rng_seed=rng_seed, target_mode=target_mode, **hp)
    except TypeError as exc:
        raise ConfigError(f"bad hyperparameters for {variant}: {exc}") from exc
    raise UnsupportedVariant(variant)
