from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import LabeledSample, samples_to_arrays
from ..errors import ConstantFeature, TooFewSamples

FEATURES = ("rtt_raw", "mean_rssi")


@dataclass(frozen=True)
class Normalizer:
    """Frozen z-score parameters for the ``(rtt_raw, mean_rssi)`` features."""

    means: tuple[float, float]
    stds: tuple[float, float]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - np.asarray(self.means)) / np.asarray(self.stds)

    def inverse(self, Xn) -> np.ndarray:
        return np.asarray(Xn, dtype=np.float64) * np.asarray(self.stds) + np.asarray(self.means)


def fit_normalizer_arrays(X) -> Normalizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewSamples(f"need >= 2 samples to normalize, got {X.shape[0] if X.ndim else 0}")
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    for k, s in enumerate(stds):
        if not s > 0:
            raise ConstantFeature(k)
    return Normalizer(tuple(float(v) for v in means), tuple(float(v) for v in stds))


def fit_normalizer(samples: Sequence[LabeledSample]) -> Normalizer:
    """Per-feature mean and sample standard deviation (n - 1 denominator)."""
    X, _ = samples_to_arrays(samples)
    return fit_normalizer_arrays(X)


def target_scale(y) -> tuple[float, float]:
    """Mean/std used to standardise regression targets.

    A constant target keeps scale 1 so bias-only fits remain possible.
    """
    y = np.asarray(y, dtype=np.float64)
    mean = float(y.mean())
    std = float(y.std(ddof=1)) if len(y) > 1 else 0.0
    return mean, (std if std > 0 else 1.0)
