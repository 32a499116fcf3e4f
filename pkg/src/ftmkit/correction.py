"""RTT to distance conversion and the vendor piecewise-linear RTT correction.

The firmware correction is modelled as a map ``rtt_est = slope_k * rtt_raw +
intercept_k`` where ``k`` is chosen by comparing ``rtt_raw`` against a short
list of breakpoints.  Segment ``k`` owns the half-open interval
``[breakpoints[k-1], breakpoints[k])``, so a value sitting exactly on a
breakpoint belongs to the segment on its right.  Inputs below the first
breakpoint (including negative RTTs) use the first segment.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .core import SPEED_OF_LIGHT
from .errors import ConfigError, InsufficientData, InsufficientPointsInSegment

DEFAULT_BREAKPOINTS = (10.0, 124.0)


def distance_from_rtt(rtt):
    """Convert a round-trip time in nanoseconds to a one-way distance in meters.

    Works elementwise on arrays. Negative input gives negative distance;
    callers clamp if they need to.
    """
    if isinstance(rtt, (int, float)):
        return rtt * 1e-9 * SPEED_OF_LIGHT / 2.0
    return np.asarray(rtt, dtype=np.float64) * 1e-9 * SPEED_OF_LIGHT / 2.0


def rtt_from_distance(distance):
    """Inverse of :func:`distance_from_rtt` (meters -> nanoseconds)."""
    return 2.0 * distance / SPEED_OF_LIGHT * 1e9


@dataclass(frozen=True)
class PiecewiseLinearMap:
    breakpoints: tuple[float, ...] = DEFAULT_BREAKPOINTS
    slopes: tuple[float, ...] = (1.0, 1.0, 1.0)
    intercepts: tuple[float, ...] = (0.0, 0.0, 0.0)
    rmse: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        object.__setattr__(self, "intercepts", tuple(float(c) for c in self.intercepts))
        object.__setattr__(self, "rmse", tuple(float(r) for r in self.rmse))
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise ConfigError(f"breakpoints must be strictly increasing: {bps}")
        n_seg = len(bps) + 1
        if len(self.slopes) != n_seg or len(self.intercepts) != n_seg:
            raise ConfigError(
                f"{len(bps)} breakpoint(s) need {n_seg} segments, "
                f"got {len(self.slopes)} slopes / {len(self.intercepts)} intercepts"
            )

    @classmethod
    def identity(cls, breakpoints: Sequence[float] = DEFAULT_BREAKPOINTS) -> "PiecewiseLinearMap":
        n = len(breakpoints) + 1
        return cls(tuple(breakpoints), (1.0,) * n, (0.0,) * n)

    @property
    def n_segments(self) -> int:
        return len(self.breakpoints) + 1

    def segment_of(self, rtt_raw: float) -> int:
        return bisect.bisect_right(self.breakpoints, rtt_raw)

    def to_dict(self) -> dict:
        d = {
            "breakpoints_ns": list(self.breakpoints),
            "segments": [
                {"slope": s, "intercept_ns": c} for s, c in zip(self.slopes, self.intercepts)
            ],
        }
        if self.rmse:
            for seg, r in zip(d["segments"], self.rmse):
                seg["rmse_ns"] = r
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseLinearMap":
        try:
            segs = d["segments"]
            return cls(
                tuple(d["breakpoints_ns"]),
                tuple(s["slope"] for s in segs),
                tuple(s["intercept_ns"] for s in segs),
                tuple(s["rmse_ns"] for s in segs if "rmse_ns" in s),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed correction map: {exc}") from exc


def apply_vendor_correction(rtt_raw, cmap: PiecewiseLinearMap):
    """Apply the piecewise-linear correction to a scalar or an array of RTTs."""
    if isinstance(rtt_raw, (int, float)):
        k = cmap.segment_of(rtt_raw)
        return cmap.slopes[k] * rtt_raw + cmap.intercepts[k]
    x = np.asarray(rtt_raw, dtype=np.float64)
    k = np.searchsorted(np.asarray(cmap.breakpoints), x, side="right")
    return np.asarray(cmap.slopes)[k] * x + np.asarray(cmap.intercepts)[k]


def _pairs_to_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs, dtype=np.float64)
    if arr.size == 0:
        return np.empty(0), np.empty(0)
    arr = arr.reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line through (x, y); returns slope, intercept, rmse."""
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        # all x equal: the slope is unidentifiable, fall back to a flat line
        slope = 0.0
    else:
        slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    return slope, intercept, math.sqrt(float(resid @ resid) / len(x))


def fit_segmented(pairs, breakpoints: Sequence[float] = DEFAULT_BREAKPOINTS) -> PiecewiseLinearMap:
    """Per-segment least-squares fit of ``rtt_est`` against ``rtt_raw``.

    Returns the fitted map; its ``rmse`` field holds the per-segment RMSE.
    """
    x, y = _pairs_to_arrays(pairs)
    bps = tuple(float(b) for b in breakpoints)
    seg = np.searchsorted(np.asarray(bps), x, side="right")
    slopes, intercepts, rmses = [], [], []
    for k in range(len(bps) + 1):
        mask = seg == k
        count = int(mask.sum())
        if count < 2:
            raise InsufficientPointsInSegment(k, count)
        s, c, r = _ols(x[mask], y[mask])
        slopes.append(s)
        intercepts.append(c)
        rmses.append(r)
    return PiecewiseLinearMap(bps, tuple(slopes), tuple(intercepts), tuple(rmses))


def global_linear_rmse(pairs) -> float:
    x, y = _pairs_to_arrays(pairs)
    return _ols(x, y)[2]


def detect_breakpoints(
    pairs,
    k: int = 3,
    min_points: int = 2,
) -> list[float]:
    """Locate ``k - 1`` breakpoints minimising the total segmented-fit SSE.

    Candidate breakpoints are the midpoints between consecutive distinct
    ``rtt_raw`` values; every segment must keep ``min_points`` samples.  The
    search is exhaustive.  Among candidates whose SSE is within a relative
    1e-9 of the minimum, the lexicographically smallest tuple wins.
    """
    if k < 2:
        raise ConfigError("k must be >= 2")
    x, y = _pairs_to_arrays(pairs)
    if len(x) < 10 * k:
        raise InsufficientData(f"need >= {10 * k} points for k={k}, got {len(x)}")
    order = np.argsort(x, kind="stable")
    x = x[order]
    y = y[order]
    # split positions: a cut at i puts x[:i] left; only between distinct values
    cuts = np.flatnonzero(x[1:] > x[:-1]) + 1
    cuts = cuts.astype(np.int64)
    stats = _prefix_stats(x, y)
    if k == 2 or k == 3:
        sse, combo = _accel.segmented_grid_search(stats, cuts, k - 1, min_points)
        if combo is None:
            raise InsufficientData("no breakpoint placement leaves enough points per segment")
    else:
        combo = _generic_search(stats, cuts, k - 1, min_points)
    return [float((x[i - 1] + x[i]) / 2.0) for i in combo]


def _prefix_stats(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cumulative [n, sx, sy, sxx, sxy, syy] with a leading zero row.

    x and y are centred first to keep the SSE formula well conditioned.
    """
    xc = x - x.mean()
    yc = y - y.mean()
    cols = np.stack([np.ones_like(xc), xc, yc, xc * xc, xc * yc, yc * yc], axis=1)
    out = np.zeros((len(x) + 1, 6))
    np.cumsum(cols, axis=0, out=out[1:])
    return out


def segment_sse(stats: np.ndarray, lo: int, hi: int) -> float:
    """SSE of the OLS line over sorted samples ``lo:hi`` using prefix stats."""
    n, sx, sy, sxx, sxy, syy = stats[hi] - stats[lo]
    vxx = sxx - sx * sx / n
    vyy = syy - sy * sy / n
    if vxx <= 0.0:
        return max(vyy, 0.0)
    vxy = sxy - sx * sy / n
    return max(vyy - vxy * vxy / vxx, 0.0)


def _generic_search(stats: np.ndarray, cuts: np.ndarray, n_bp: int, min_points: int):
    n = int(stats[-1, 0])
    best = math.inf
    results = []
    for combo in itertools.combinations(cuts.tolist(), n_bp):
        bounds = (0, *combo, n)
        if any(b - a < min_points for a, b in zip(bounds, bounds[1:])):
            continue
        sse = sum(segment_sse(stats, a, b) for a, b in zip(bounds, bounds[1:]))
        results.append((combo, sse))
        best = min(best, sse)
    if not results:
        raise InsufficientData("no breakpoint placement leaves enough points per segment")
    tol = 1e-9 * best + 1e-12
    for combo, sse in results:
        if sse <= best + tol:
            return combo


def fit_by_bandwidth(measurements: Iterable, breakpoints: Sequence[float]) -> dict:
    """Fit one map per bandwidth from measurements carrying ``rtt_est``."""
    groups: dict[int, list[tuple[float, float]]] = {}
    for m in measurements:
        if m.rtt_est is None:
            continue
        groups.setdefault(int(m.bandwidth), []).append((m.rtt_raw, m.rtt_est))
    return {bw: fit_segmented(p, breakpoints) for bw, p in sorted(groups.items())}
