"""Per-source train/test split and k-fold partitioning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, TypeVar

import numpy as np

from ..errors import ConfigError, EmptySource

T = TypeVar("T")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.70
    folds: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")


def n_train_for(n: int, fraction: float) -> int:
    """``round(fraction * n)`` with halves rounded up."""
    return int(math.floor(fraction * n + 0.5))


def split_by_source(sources: Mapping[str, Sequence[T]] | Sequence[Sequence[T]], spec: SplitSpec):
    """Shuffle and split each source separately.

    Returns ``{name: (train, test)}``.  Each source gets its own RNG stream
    derived from ``spec.rng_seed`` and its position, so adding a source never
    reshuffles the others.  Both parts keep the source order.
    """
    items = list(sources.items()) if isinstance(sources, Mapping) else list(enumerate(sources))
    out = {}
    for k, (name, samples) in enumerate(items):
        samples = list(samples)
        if not samples:
            raise EmptySource(f"source {name!r} has no samples")
        rng = np.random.default_rng([int(spec.rng_seed), k])
        perm = rng.permutation(len(samples))
        cut = n_train_for(len(samples), spec.train_fraction)
        out[name] = ([samples[i] for i in sorted(perm[:cut])], [samples[i] for i in sorted(perm[cut:])])
    return out


def split(sources: Mapping[str, Sequence[T]] | Sequence[Sequence[T]], spec: SplitSpec):
    """Per-source split (see :func:`split_by_source`) merged into one train and one test list."""
    train: list[T] = []
    test: list[T] = []
    for tr, te in split_by_source(sources, spec).values():
        train.extend(tr)
        test.extend(te)
    return train, test


def kfold_indices(n: int, folds: int, rng_seed: int) -> list[np.ndarray]:
    """Disjoint validation index sets covering ``range(n)`` exactly once."""
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    if n < folds:
        raise ConfigError(f"cannot make {folds} folds from {n} samples")
    perm = np.random.default_rng(rng_seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]
