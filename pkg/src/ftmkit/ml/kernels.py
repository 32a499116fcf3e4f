"""Kernel functions on normalized feature vectors.

``gaussian``: ``sigma_f**2 * exp(-||xi - xj||**2 / sigma_l**2)``; with the
default ``sigma_f = sigma_l = 1`` this is the plain ``exp(-||xi - xj||**2)``
used by the SVR.

``exponential``: ``sigma_f**2 * exp(-r / sigma_l)`` with ``r`` the Euclidean
distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import ConfigError, DimensionMismatch

KINDS = ("gaussian", "exponential")


@dataclass(frozen=True)
class KernelParams:
    kind: str = "gaussian"
    sigma_f: float = 1.0
    sigma_l: float = 1.0
    noise_sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kernel kind must be one of {KINDS}, got {self.kind!r}")
        if not (self.sigma_f > 0 and self.sigma_l > 0 and self.noise_sigma >= 0):
            raise ConfigError("kernel needs sigma_f > 0, sigma_l > 0, noise_sigma >= 0")


# Length scales fitted on the campaign data
TABLE_I_EXPONENTIAL = KernelParams("exponential", sigma_f=4.6873, sigma_l=0.7051, noise_sigma=0.1)


def _pair(xi, xj) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(xi, dtype=np.float64).ravel()
    b = np.asarray(xj, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"vectors of length {a.size} and {b.size}")
    return a, b


def gaussian_kernel(xi, xj) -> float:
    a, b = _pair(xi, xj)
    d = a - b
    return math.exp(-float(d @ d))


def exponential_kernel(xi, xj, p: KernelParams) -> float:
    if p.kind != "exponential":
        raise ConfigError("exponential_kernel needs KernelParams(kind='exponential')")
    a, b = _pair(xi, xj)
    d = a - b
    r = math.sqrt(float(d @ d))
    return p.sigma_f**2 * math.exp(-r / p.sigma_l)


def gram(A, B, p: KernelParams) -> np.ndarray:
    """Kernel matrix between the rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"feature counts {A.shape[1]} and {B.shape[1]} differ")
    if p.kind == "gaussian":
        return p.sigma_f**2 * np.exp(-cdist(A, B, "sqeuclidean") / p.sigma_l**2)
    return p.sigma_f**2 * np.exp(-cdist(A, B, "euclidean") / p.sigma_l)
