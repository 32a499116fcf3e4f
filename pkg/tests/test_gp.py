import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import gp_dense

from ftmkit.errors import ConfigError, DimensionMismatch
from ftmkit.ml.gp import fit_gp, subsample_indices
from ftmkit.ml.kernels import TABLE_I_EXPONENTIAL, KernelParams, exponential_kernel, gaussian_kernel, gram


def test_kernel_examples():
    assert gaussian_kernel([0.0, 0.0], [0.0, 0.0]) == 1.0
    assert gaussian_kernel([0.0, 0.0], [1.0, 0.0]) == pytest.approx(math.exp(-1))
    assert exponential_kernel([1, 2], [1, 2], TABLE_I_EXPONENTIAL) == pytest.approx(21.971, abs=1e-3)
    p = KernelParams("exponential", 2.0, 0.5)
    assert exponential_kernel([0, 0], [0.5, 0], p) == pytest.approx(4 * math.exp(-1))
    assert exponential_kernel([0, 0], [2, 0], KernelParams("exponential")) == pytest.approx(math.exp(-2))
    with pytest.raises(DimensionMismatch):
        gaussian_kernel([0, 0], [0, 0, 0])
    with pytest.raises(ConfigError):
        exponential_kernel([0, 0], [0, 0], KernelParams("gaussian"))
    with pytest.raises(ConfigError):
        KernelParams("gaussian", sigma_f=0.0)


@given(st.floats(0, 30))
def test_gaussian_decreases_with_distance(r):
    assert gaussian_kernel([0, 0], [r, 0]) >= gaussian_kernel([0, 0], [r + 0.1, 0])


def test_gram_matches_pointwise_kernels():
    rng = np.random.default_rng(0)
    A, B = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
    G = gram(A, B, TABLE_I_EXPONENTIAL)
    ref = [[exponential_kernel(a, b, TABLE_I_EXPONENTIAL) for b in B] for a in A]
    assert np.allclose(G, ref, rtol=1e-13)
    assert np.allclose(gram(A, B, KernelParams()), [[gaussian_kernel(a, b) for b in B] for a in A], rtol=1e-13)


@pytest.mark.parametrize("kind", ["gaussian", "exponential"])
def test_matches_dense_inverse(kind):
    rng = np.random.default_rng(1)
    p = KernelParams(kind, 1.7, 0.8, 0.2)
    for _ in range(5):
        n = int(rng.integers(1, 21))
        X, y = rng.normal(size=(n, 2)), rng.normal(size=n)
        Q = rng.normal(size=(30, 2))
        ref = gp_dense(X, y, Q, lambda a, b: float(gram(a[None], b[None], p)[0, 0]), p.noise_sigma)
        assert np.abs(fit_gp(X, y, p).predict(Q) - ref).max() < 1e-8


def test_near_noiseless_interpolates():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(15, 2)), rng.normal(size=15)
    gp = fit_gp(X, y, KernelParams("exponential", 1.0, 1.0, 1e-6))
    assert np.abs(gp.predict(X) - y).max() < 1e-3


def test_single_point_posterior():
    p = KernelParams("gaussian", 2.0, 1.0, 0.5)
    gp = fit_gp([[0.3, 0.1]], [3.0], p)
    assert gp.predict([[0.3, 0.1]])[0] == pytest.approx(3.0 * 4.0 / (4.0 + 0.25))


def test_duplicate_points_need_jitter():
    X = np.array([[0.0, 0.0]] * 3 + [[1.0, 1.0]])
    gp = fit_gp(X, [1.0, 1.0, 1.0, 2.0], KernelParams("gaussian", 1.0, 1.0, 0.0))
    assert gp.jitter > 0
    assert gp.predict([[1.0, 1.0]])[0] == pytest.approx(2.0, abs=1e-3)


def test_subsample_is_seeded_and_sorted():
    a = subsample_indices(100, 10, 3)
    assert np.array_equal(a, subsample_indices(100, 10, 3))
    assert np.all(np.diff(a) > 0)
    assert np.array_equal(subsample_indices(5, 10, 3), np.arange(5))
