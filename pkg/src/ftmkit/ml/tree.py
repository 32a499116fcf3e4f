"""CART regression tree stored as flat node arrays.

Growth is greedy: at every node, try every split on every feature and keep
the one with the largest drop in sum of squared errors.  Thresholds are
midpoints between consecutive distinct sorted values.  A split is only
allowed if both children keep ``min_leaf_size`` samples.  A node stays a
leaf when no allowed split reduces the SSE by more than ``1e-9 * SSE``.  Gains within that
same tolerance of the best are ties; the lowest feature index wins, then the
smallest threshold.  Samples with ``x[feature] <= threshold`` go left.

Node ``0`` is the root.  A split appends its two children together, left
first, and the left subtree is grown before the right one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _accel
from ..errors import ConfigError, TooFewSamples


@dataclass(frozen=True, eq=False)
class TreeEstimator:
    feature: np.ndarray  # int32, -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    min_leaf_size: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]

    def splits(self) -> list[tuple[int, int, float]]:
        """Internal nodes as ``(node, feature, threshold)`` in node order."""
        return [(int(i), int(f), float(t)) for i, (f, t) in enumerate(zip(self.feature, self.threshold)) if f >= 0]

    def preorder(self) -> list[tuple[int, float]]:
        """``(feature, threshold)`` per node in depth-first preorder; leaves are ``(-1, value)``."""
        out, stack = [], [0]
        while stack:
            k = stack.pop()
            if self.feature[k] < 0:
                out.append((-1, float(self.value[k])))
            else:
                out.append((int(self.feature[k]), float(self.threshold[k])))
                stack.append(int(self.right[k]))
                stack.append(int(self.left[k]))
        return out


def fit_tree(X, y, min_leaf_size: int = 4) -> TreeEstimator:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if min_leaf_size < 1:
        raise ConfigError("min_leaf_size must be >= 1")
    if len(y) != len(X):
        raise ConfigError("X and y lengths differ")
    if len(y) < 2 * min_leaf_size:
        raise TooFewSamples(f"need >= {2 * min_leaf_size} samples for min_leaf_size={min_leaf_size}, got {len(y)}")
    arrays = _accel.build_tree(X, y, min_leaf_size)
    return TreeEstimator(*arrays, min_leaf_size=int(min_leaf_size))
