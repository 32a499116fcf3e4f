"""Hyperparameter search scored by k-fold cross-validated RMSE.

A search space maps each hyperparameter name to either a list of choices or
a range ``{"low": a, "high": b, "log": bool, "integer": bool}``.

Strategies
----------
random
    Seeded random sampling (default).  If the space is finite and no larger
    than the budget, every point is evaluated once, in shuffled order.
grid
    A coarse grid, evaluated in lexicographic order up to the budget.
surrogate
    A few random probes, then each next candidate maximises expected
    improvement under a Gaussian-process surrogate fitted to the scores
    seen so far.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm

from ..core import LabeledSample, samples_to_arrays
from ..errors import ConfigError, EmptySearchSpace, FtmError
from .gp import fit_gp
from .kernels import KernelParams, gram
from .model import train
from .split import kfold_indices

STRATEGIES = ("random", "grid", "surrogate")

DEFAULT_SPACES: dict[str, dict[str, Any]] = {
    "tree": {"min_leaf_size": list(range(1, 41))},
    "svr": {
        "C": {"low": 0.1, "high": 100.0, "log": True},
        "epsilon": {"low": 0.01, "high": 0.5, "log": True},
        "sigma_l": {"low": 0.2, "high": 3.0, "log": True},
    },
    "gp": {
        "sigma_f": {"low": 0.5, "high": 10.0, "log": True},
        "sigma_l": {"low": 0.1, "high": 5.0, "log": True},
        "noise_sigma": {"low": 0.01, "high": 1.0, "log": True},
    },
    "nn": {
        "hidden": [10, 25, 50, 100, 200],
        "lr": {"low": 1e-4, "high": 1e-2, "log": True},
    },
}


@dataclass
class CVResult:
    best_params: dict
    best_score: float
    history: list = field(default_factory=list)  # (params, score) in evaluation order
    strategy: str = "random"


class _Dim:
    def __init__(self, name: str, spec):
        self.name = name
        if isinstance(spec, (list, tuple)):
            if not spec:
                raise EmptySearchSpace(f"{name!r} has no choices")
            self.choices = list(spec)
        elif isinstance(spec, Mapping):
            self.choices = None
            self.low = float(spec["low"])
            self.high = float(spec["high"])
            self.log = bool(spec.get("log", False))
            self.integer = bool(spec.get("integer", False))
            if self.high < self.low or (self.log and self.low <= 0):
                raise ConfigError(f"bad range for {name!r}")
        else:
            self.choices = [spec]

    @property
    def finite(self) -> bool:
        return self.choices is not None

    def from_unit(self, u: float):
        if self.finite:
            return self.choices[min(int(u * len(self.choices)), len(self.choices) - 1)]
        if self.log:
            v = math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low)))
        else:
            v = self.low + u * (self.high - self.low)
        return int(round(v)) if self.integer else float(v)

    def to_unit(self, v) -> float:
        if self.finite:
            return (self.choices.index(v) + 0.5) / len(self.choices)
        if self.log:
            return (math.log(v) - math.log(self.low)) / (math.log(self.high) - math.log(self.low) or 1.0)
        return (v - self.low) / ((self.high - self.low) or 1.0)

    def grid(self, points: int) -> list:
        if self.finite:
            return list(self.choices)
        us = [0.5] if points == 1 else [k / (points - 1) for k in range(points)]
        out = []
        for u in us:
            v = self.from_unit(u)
            if v not in out:
                out.append(v)
        return out


def _dims(space: Mapping) -> list[_Dim]:
    if not space:
        raise EmptySearchSpace("search space is empty")
    return [_Dim(k, space[k]) for k in space]


def _random_candidates(dims, budget, rng) -> list[dict]:
    if all(d.finite for d in dims):
        total = math.prod(len(d.choices) for d in dims)
        if total <= budget:
            combos = list(itertools.product(*(d.choices for d in dims)))
            order = rng.permutation(total)
            return [dict(zip((d.name for d in dims), combos[i])) for i in order]
    return [{d.name: d.from_unit(rng.random()) for d in dims} for _ in range(budget)]


def _grid_candidates(dims, budget) -> list[dict]:
    n_cont = sum(not d.finite for d in dims)
    finite_size = math.prod(len(d.choices) for d in dims if d.finite)
    per_dim = max(2, int((budget / max(finite_size, 1)) ** (1.0 / n_cont))) if n_cont else 1
    axes = [d.grid(per_dim) for d in dims]
    combos = itertools.islice(itertools.product(*axes), budget)
    return [dict(zip((d.name for d in dims), c)) for c in combos]


def cv_score(
    samples: Sequence[LabeledSample],
    variant: str,
    params: dict,
    folds: int = 5,
    rng_seed: int = 0,
    target_mode: str = "absolute",
    fold_sets: Optional[list[np.ndarray]] = None,
) -> float:
    """Mean over folds of the validation RMSE in meters."""
    samples = list(samples)
    if fold_sets is None:
        fold_sets = kfold_indices(len(samples), folds, rng_seed)
    X, y = samples_to_arrays(samples)
    rmses = []
    for k, val in enumerate(fold_sets):
        mask = np.ones(len(samples), dtype=bool)
        mask[val] = False
        tr = [s for s, keep in zip(samples, mask) if keep]
        model = train(variant, tr, params, rng_seed=rng_seed + k, target_mode=target_mode)
        err = model.predict_array(X[val]) - y[val]
        rmses.append(math.sqrt(float(np.mean(err * err))))
    return float(np.mean(rmses))


def cross_validate(
    train_samples: Sequence[LabeledSample],
    variant: str,
    hyper_space: Optional[Mapping] = None,
    folds: int = 5,
    budget: int = 50,
    rng_seed: int = 0,
    strategy: str = "random",
    target_mode: str = "absolute",
    fixed: Optional[Mapping] = None,
    on_evaluate: Optional[Callable[[dict, float], None]] = None,
) -> CVResult:
    """Pick the hyperparameters with the lowest mean CV RMSE.

    All candidates share one fold partition.  Ties keep the candidate that was
    evaluated first.  Candidates whose training raises a toolkit error score
    ``inf``.
    """
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    if strategy not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}")
    space = DEFAULT_SPACES.get(variant, {}) if hyper_space is None else hyper_space
    dims = _dims(space)
    fixed = dict(fixed or {})
    samples = list(train_samples)
    fold_sets = kfold_indices(len(samples), folds, rng_seed)
    rng = np.random.default_rng([int(rng_seed), 0x5EA4C])

    history: list[tuple[dict, float]] = []

    def evaluate(cand: dict) -> float:
        try:
            s = cv_score(samples, variant, {**fixed, **cand}, folds, rng_seed, target_mode, fold_sets)
        except FtmError:
            s = math.inf
        history.append((dict(cand), s))
        if on_evaluate is not None:
            on_evaluate(cand, s)
        return s

    if strategy == "grid":
        for cand in _grid_candidates(dims, budget):
            evaluate(cand)
    elif strategy == "random":
        for cand in _random_candidates(dims, budget, rng):
            evaluate(cand)
    else:
        _surrogate_search(dims, budget, rng, evaluate, history)

    best_params, best_score = history[0]
    for params, score in history[1:]:
        if score < best_score:
            best_params, best_score = params, score
    return CVResult({**fixed, **best_params}, best_score, history, strategy)


def _surrogate_search(dims, budget, rng, evaluate, history, n_init: int = 5, pool: int = 256):
    for cand in _random_candidates(dims, min(n_init, budget), rng):
        evaluate(cand)
    seen = {tuple(sorted(c.items())) for c, _ in history}
    kernel = KernelParams("gaussian", 1.0, 0.3, 0.05)
    while len(history) < budget:
        finite = [(c, s) for c, s in history if math.isfinite(s)]
        pool_cands = [{d.name: d.from_unit(rng.random()) for d in dims} for _ in range(pool)]
        pool_cands = [c for c in pool_cands if tuple(sorted(c.items())) not in seen]
        if not pool_cands:
            break
        if len(finite) < 2:
            nxt = pool_cands[0]
        else:
            U = np.array([[d.to_unit(c[d.name]) for d in dims] for c, _ in finite])
            s = np.array([v for _, v in finite])
            mu, sd = s.mean(), s.std() or 1.0
            gp = fit_gp(U, (s - mu) / sd, kernel)
            P = np.array([[d.to_unit(c[d.name]) for d in dims] for c in pool_cands])
            kxs = gram(P, gp.X, kernel)
            mean = kxs @ gp.weights
            # posterior variance needs the noisy Gram matrix again
            Kxx = gram(gp.X, gp.X, kernel) + kernel.noise_sigma**2 * np.eye(len(gp.X))
            v = np.linalg.solve(Kxx, kxs.T)
            var = np.maximum(kernel.sigma_f**2 - np.sum(kxs.T * v, axis=0), 1e-12)
            std = np.sqrt(var)
            best = ((s - mu) / sd).min()
            z = (best - mean) / std
            ei = (best - mean) * norm.cdf(z) + std * norm.pdf(z)
            nxt = pool_cands[int(np.argmax(ei))]
        seen.add(tuple(sorted(nxt.items())))
        evaluate(nxt)
