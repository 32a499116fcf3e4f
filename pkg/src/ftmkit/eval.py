"""Ranging error metrics, ECDFs and comparison reports.

The ECDF is right-continuous: ``F(x) = #{errors <= x} / n``.

Report files are tab-separated with ``#`` comment lines carrying metadata.
Numbers are written with six decimals so regenerated reports are byte
identical.

``summary.tsv`` columns:
    estimator, n, median_m, mean_m, p75_m, p90_m
``ecdf_<estimator>.tsv`` columns:
    error_m, cumulative_fraction
``rssi_profile.tsv`` columns:
    distance_m, n, mean_rssi_dbm, std_rssi_dbm
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import Bandwidth, Dataset, Scenario
from .correction import distance_from_rtt
from .errors import EmptyInput, IoFailure, NoGroundTruth

# Expected 90th-percentile ranging error by channel width (m), as quoted by
# the chip vendor for FTM.
VENDOR_P90_ERROR_M = {20: 4.0, 40: 8.0, 80: 2.0}

SUMMARY_COLUMNS = ("estimator", "n", "median_m", "mean_m", "p75_m", "p90_m")
ECDF_COLUMNS = ("error_m", "cumulative_fraction")
RSSI_COLUMNS = ("distance_m", "n", "mean_rssi_dbm", "std_rssi_dbm")


@dataclass(frozen=True)
class ErrorRecord:
    estimator_name: str
    true_distance: float
    estimated_distance: float
    abs_error: float
    scenario: Scenario = Scenario.SYNTHETIC
    bandwidth: Bandwidth = Bandwidth.MHZ20

    @classmethod
    def make(cls, name, true_d, est_d, scenario=Scenario.SYNTHETIC, bandwidth=Bandwidth.MHZ20):
        return cls(name, float(true_d), float(est_d), abs(float(est_d) - float(true_d)), scenario, bandwidth)


@dataclass(frozen=True, eq=False)
class EcdfCurve:
    sorted_errors: np.ndarray
    cumulative: np.ndarray

    def __call__(self, x: float) -> float:
        return percentile_below(self, x)

    def quantile(self, q: float) -> float:
        """Smallest error whose ECDF value reaches ``q``."""
        k = int(np.searchsorted(self.cumulative, q - 1e-12, side="left"))
        return float(self.sorted_errors[min(k, len(self.sorted_errors) - 1)])


def ecdf(errors: Iterable[float]) -> EcdfCurve:
    e = np.sort(np.asarray(list(errors) if not isinstance(errors, np.ndarray) else errors, dtype=np.float64))
    if e.size == 0:
        raise EmptyInput("ECDF of an empty error list")
    return EcdfCurve(e, np.arange(1, e.size + 1) / e.size)


def percentile_below(curve: EcdfCurve, threshold: float) -> float:
    """Fraction of errors ``<= threshold``."""
    return float(np.searchsorted(curve.sorted_errors, threshold, side="right") / curve.sorted_errors.size)


@dataclass(frozen=True)
class EstimatorSummary:
    estimator: str
    n: int
    median: float
    mean: float
    p75: float
    p90: float


def summarize(name: str, errors: Sequence[float]) -> EstimatorSummary:
    e = np.asarray(errors, dtype=np.float64)
    if e.size == 0:
        raise EmptyInput(f"no errors for estimator {name!r}")
    return EstimatorSummary(
        name,
        int(e.size),
        float(np.median(e)),
        float(np.mean(e)),
        float(np.percentile(e, 75)),
        float(np.percentile(e, 90)),
    )


@dataclass(frozen=True)
class ComparisonReport:
    summaries: tuple[EstimatorSummary, ...]
    curves: Mapping[str, EcdfCurve]

    def ranked(self) -> list[EstimatorSummary]:
        return sorted(self.summaries, key=lambda s: (s.median, s.mean, s.estimator))


def group_errors(records: Iterable[ErrorRecord]) -> dict[str, list[float]]:
    groups: dict[str, list[float]] = defaultdict(list)
    for r in records:
        groups[r.estimator_name].append(r.abs_error)
    return dict(groups)


def compare(groups: Mapping[str, Sequence[float]] | Iterable[ErrorRecord]) -> ComparisonReport:
    """Per-estimator summary statistics plus full ECDF curves."""
    if not isinstance(groups, Mapping):
        groups = group_errors(groups)
    if not groups:
        raise EmptyInput("compare needs at least one estimator group")
    names = sorted(groups)
    return ComparisonReport(
        tuple(summarize(n, groups[n]) for n in names),
        {n: ecdf(groups[n]) for n in names},
    )


def _f(x: float) -> str:
    return f"{x:.6f}"


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _meta_lines(meta: Optional[Mapping[str, str]]) -> str:
    return "".join(f"# {k}={meta[k]}\n" for k in sorted(meta or {}))


def summary_table(report: ComparisonReport, meta: Optional[Mapping[str, str]] = None) -> str:
    lines = [_meta_lines(meta), "\t".join(SUMMARY_COLUMNS) + "\n"]
    for s in report.ranked():
        lines.append("\t".join([s.estimator, str(s.n), _f(s.median), _f(s.mean), _f(s.p75), _f(s.p90)]) + "\n")
    return "".join(lines)


def ecdf_table(curve: EcdfCurve, meta: Optional[Mapping[str, str]] = None) -> str:
    rows = [_meta_lines(meta), "\t".join(ECDF_COLUMNS) + "\n"]
    rows.extend(f"{_f(e)}\t{_f(c)}\n" for e, c in zip(curve.sorted_errors, curve.cumulative))
    return "".join(rows)


def write_comparison(report: ComparisonReport, out_dir, meta: Optional[Mapping[str, str]] = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [_write(out / "summary.tsv", summary_table(report, meta))]
    for name in sorted(report.curves):
        paths.append(_write(out / f"ecdf_{_safe_name(name)}.tsv", ecdf_table(report.curves[name], meta)))
    return paths


@dataclass(frozen=True)
class RssiRow:
    distance: float
    n: int
    mean_rssi: float
    std_rssi: float


def rssi_profile(dataset: Dataset, decimals: int = 1) -> list[RssiRow]:
    """Mean/std of per-measurement mean RSSI grouped by rounded true distance.

    The std is the population std, so a single sample gives 0.
    """
    groups: dict[float, list[float]] = defaultdict(list)
    for m in dataset.measurements:
        if m.true_distance is None:
            raise NoGroundTruth(f"measurement from anchor {m.anchor_id} has no true_distance")
        if not m.frames:
            continue
        groups[round(m.true_distance, decimals)].append(m.mean_rssi)
    rows = []
    for d in sorted(groups):
        v = np.asarray(groups[d])
        rows.append(RssiRow(float(d), int(v.size), float(v.mean()), float(v.std())))
    return rows


def rssi_profile_table(rows: Sequence[RssiRow], meta: Optional[Mapping[str, str]] = None) -> str:
    out = [_meta_lines(meta), "\t".join(RSSI_COLUMNS) + "\n"]
    out.extend(f"{_f(r.distance)}\t{r.n}\t{_f(r.mean_rssi)}\t{_f(r.std_rssi)}\n" for r in rows)
    return "".join(out)


def distance_rssi_spearman(dataset: Dataset) -> float:
    from scipy.stats import spearmanr

    d = [m.true_distance for m in dataset.measurements]
    r = [m.mean_rssi for m in dataset.measurements]
    return float(spearmanr(d, r).statistic)


def baseline_records(dataset: Dataset) -> list[ErrorRecord]:
    """Raw-RTT and firmware (``dist_est``) error records for a labeled dataset."""
    out = []
    for m in dataset.measurements:
        if m.true_distance is None:
            raise NoGroundTruth(f"measurement from anchor {m.anchor_id} has no true_distance")
        out.append(ErrorRecord.make("rtt_raw", m.true_distance, distance_from_rtt(m.rtt_raw), dataset.scenario, m.bandwidth))
        if m.dist_est is not None:
            out.append(ErrorRecord.make("dist_est", m.true_distance, m.dist_est, dataset.scenario, m.bandwidth))
    return out


def is_finite_report(report: ComparisonReport) -> bool:
    return all(math.isfinite(s.median) for s in report.summaries)
