"""Epsilon-insensitive support vector regression.

The dual is solved with SMO (maximal-gain second-order working set
selection, as in LIBSVM) until the KKT gap falls below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _accel
from ..errors import ConfigError, NotConverged
from .kernels import KernelParams, gram

DEFAULT_C = 10.0
DEFAULT_EPSILON = 0.1


@dataclass(frozen=True, eq=False)
class SvrEstimator:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i - alpha_i*, in [-C, C]
    bias: float
    kernel: KernelParams
    C: float
    epsilon: float
    iterations: int = 0
    kkt_gap: float = 0.0
    objective: float = 0.0

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if len(self.dual_coef) == 0:
            return np.full(len(X), self.bias)
        return gram(X, self.support_vectors, self.kernel) @ self.dual_coef + self.bias


def fit_svr(
    X,
    y,
    C: float = DEFAULT_C,
    epsilon: float = DEFAULT_EPSILON,
    kernel: KernelParams = KernelParams("gaussian"),
    tol: float = 1e-3,
    max_iterations: int = 1_000_000,
    keep_all: bool = False,
) -> SvrEstimator:
    """Fit on feature rows ``X`` and targets ``y``.

    Samples with a zero dual coefficient are dropped from the model unless
    ``keep_all`` is set.
    """
    if not C > 0:
        raise ConfigError("C must be > 0")
    if not epsilon >= 0:
        raise ConfigError("epsilon must be >= 0")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    K = gram(X, X, kernel)
    beta, rho, iters, gap, obj, converged = _accel.smo_solve(K, y, C, epsilon, tol, max_iterations)
    if not converged:
        raise NotConverged(max_iterations, gap)
    keep = np.ones(len(beta), dtype=bool) if keep_all else beta != 0.0
    return SvrEstimator(
        support_vectors=X[keep].copy(),
        dual_coef=np.asarray(beta)[keep].copy(),
        bias=-float(rho),
        kernel=kernel,
        C=float(C),
        epsilon=float(epsilon),
        iterations=int(iters),
        kkt_gap=float(gap),
        objective=float(obj),
    )
