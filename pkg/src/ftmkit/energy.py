"""Duty-cycle current and battery budget for a periodically ranging device.

The device sleeps at ``i_sleep`` and wakes once per period for an FTM
exchange lasting ``t_ftm`` seconds at an average ``i_ftm_avg``.  Charge per
day splits into an idle share and an FTM share.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .errors import ConfigError, PeriodTooShort

SECONDS_PER_DAY = 86_400.0


@dataclass(frozen=True)
class EnergyProfile:
    i_sleep: float = 0.5606  # mA, board in deep sleep
    i_ftm_avg: float = 75.6  # mA, averaged over one exchange
    t_ftm: float = 0.636  # s
    battery_capacity: float = 2000.0  # mAh

    def __post_init__(self):
        if min(self.i_sleep, self.i_ftm_avg, self.t_ftm, self.battery_capacity) <= 0:
            raise ConfigError("energy profile values must all be > 0")


@dataclass(frozen=True)
class DailyBudget:
    e_idle: float  # mAh per day
    e_ftm: float  # mAh per day
    idle_time_fraction: float

    @property
    def total(self) -> float:
        return self.e_idle + self.e_ftm


def _check(p: EnergyProfile, period: float) -> None:
    if not period > p.t_ftm:
        raise PeriodTooShort(f"period {period} s must exceed the FTM duration {p.t_ftm} s")


def average_current(p: EnergyProfile, period: float) -> float:
    """Time-weighted mean current in mA."""
    _check(p, period)
    return (p.t_ftm * p.i_ftm_avg + (period - p.t_ftm) * p.i_sleep) / period


def battery_lifetime(p: EnergyProfile, period: float) -> int:
    """Whole days until the battery is drained."""
    return math.floor(p.battery_capacity / average_current(p, period) / 24.0)


def daily_budget(p: EnergyProfile, period: float) -> DailyBudget:
    _check(p, period)
    ftm_fraction = p.t_ftm / period
    hours = SECONDS_PER_DAY / 3600.0
    return DailyBudget(
        e_idle=(1.0 - ftm_fraction) * p.i_sleep * hours,
        e_ftm=ftm_fraction * p.i_ftm_avg * hours,
        idle_time_fraction=1.0 - ftm_fraction,
    )


_UNITS = {"": 1.0, "s": 1.0, "m": 60.0, "min": 60.0, "h": 3600.0, "d": 86400.0}


def parse_period(text: str) -> float:
    """Parse ``"10s"``, ``"1m"``, ``"10min"``, ``"1h"`` or a bare number of seconds."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([a-z]*)\s*", text.lower())
    if not m or m.group(2) not in _UNITS:
        raise ConfigError(f"cannot parse period {text!r}")
    return float(m.group(1)) * _UNITS[m.group(2)]


def format_period(seconds: float) -> str:
    for unit, size in (("h", 3600.0), ("min", 60.0)):
        if seconds >= size and seconds % size == 0:
            return f"{int(seconds // size)} {unit}"
    return f"{seconds:g} s"


TABLE_II_PERIODS = (10.0, 60.0, 600.0, 1800.0, 3600.0)


@dataclass(frozen=True)
class EnergyRow:
    algorithm: str
    period: float
    current_ma: float
    lifetime_days: int
    idle_fraction: float
    e_idle_mah: float
    e_ftm_mah: float


def energy_table(
    periods: Iterable[float] = TABLE_II_PERIODS,
    profile: EnergyProfile = EnergyProfile(),
    algorithms: Optional[dict[str, Optional[float]]] = None,
) -> list[EnergyRow]:
    """One row per (algorithm, period).

    ``algorithms`` maps a label to an optional ``i_ftm_avg`` override; by
    default the regression-tree and vendor rows share the profile.
    """
    if algorithms is None:
        algorithms = {"ftm-regression-tree": None, "ftm-vendor": None}
    rows = []
    periods = list(periods)
    for name, i_ftm in algorithms.items():
        prof = profile if i_ftm is None else replace(profile, i_ftm_avg=float(i_ftm))
        for t in periods:
            b = daily_budget(prof, t)
            rows.append(
                EnergyRow(name, t, average_current(prof, t), battery_lifetime(prof, t), b.idle_time_fraction, b.e_idle, b.e_ftm)
            )
    return rows


ENERGY_COLUMNS = (
    "algorithm",
    "period",
    "period_s",
    "current_ma",
    "lifetime_days",
    "idle_fraction",
    "e_idle_mah_per_day",
    "e_ftm_mah_per_day",
)


def energy_report(rows: Sequence[EnergyRow], profile: EnergyProfile, meta: Optional[dict] = None) -> str:
    head = [f"# {k}={v}\n" for k, v in sorted((meta or {}).items())]
    head.append(
        f"# profile i_sleep_ma={profile.i_sleep} i_ftm_avg_ma={profile.i_ftm_avg} "
        f"t_ftm_s={profile.t_ftm} battery_mah={profile.battery_capacity}\n"
    )
    lines = ["\t".join(ENERGY_COLUMNS) + "\n"]
    for r in rows:
        lines.append(
            "\t".join(
                [
                    r.algorithm,
                    format_period(r.period),
                    f"{r.period:g}",
                    f"{r.current_ma:.2f}",
                    str(r.lifetime_days),
                    f"{r.idle_fraction:.5f}",
                    f"{r.e_idle_mah:.3f}",
                    f"{r.e_ftm_mah:.3f}",
                ]
            )
            + "\n"
        )
    return "".join(head + lines)
