"""Exact Gaussian-process regression, posterior mean only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import FactorizationFailed
from .kernels import KernelParams, gram

DEFAULT_MAX_POINTS = 2000
_JITTER_STEPS = 8


@dataclass(frozen=True, eq=False)
class GpEstimator:
    X: np.ndarray
    weights: np.ndarray
    kernel: KernelParams
    jitter: float = 0.0

    def predict(self, X) -> np.ndarray:
        return gram(X, self.X, self.kernel) @ self.weights


def fit_gp(X, y, kernel: KernelParams) -> GpEstimator:
    """Solve ``(K + noise**2 I) w = y`` by Cholesky.

    If the factorization fails, extra diagonal jitter starting at
    ``1e-10 * mean(diag K)`` is added, ten times larger on each retry.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    K = gram(X, X, kernel)
    K[np.diag_indices_from(K)] += kernel.noise_sigma**2
    scale = float(np.mean(np.diag(K)))
    jitter = 0.0
    for step in range(_JITTER_STEPS + 1):
        try:
            Kj = K if jitter == 0.0 else K + jitter * np.eye(len(K))
            factor = cho_factor(Kj, lower=True, check_finite=True)
            break
        except (LinAlgError, ValueError):
            jitter = scale * 1e-10 * 10.0**step
    else:
        raise FactorizationFailed(f"kernel matrix not SPD even with jitter {jitter:.3g}")
    weights = cho_solve(factor, y)
    return GpEstimator(X.copy(), weights, kernel, jitter)


def subsample_indices(n: int, max_points: int, seed: int) -> np.ndarray:
    if n <= max_points:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=max_points, replace=False))
