import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftmkit.energy import (
    EnergyProfile,
    average_current,
    battery_lifetime,
    daily_budget,
    energy_table,
    format_period,
    parse_period,
)
from ftmkit.errors import ConfigError, PeriodTooShort

P = EnergyProfile()


def test_examples():
    assert average_current(P, 10) == pytest.approx(5.33, abs=0.05)
    assert average_current(P, 3600) == pytest.approx(0.57, abs=0.01)
    assert average_current(P, 1e12) == pytest.approx(P.i_sleep, abs=1e-9)
    assert [battery_lifetime(P, t) for t in (10, 600, 3600)] == [15, 130, 145]


@given(st.floats(0.7, 1e6), st.floats(1.001, 10))
def test_current_decreasing_and_bounded(t, k):
    a, b = average_current(P, t), average_current(P, t * k)
    assert P.i_sleep < b < a < P.i_ftm_avg


@given(st.floats(0.7, 1e6))
def test_daily_budget_conserves_charge(t):
    b = daily_budget(P, t)
    assert b.e_idle + b.e_ftm == pytest.approx(average_current(P, t) * 24, rel=1e-12)


def test_idle_fraction():
    assert daily_budget(P, 60).idle_time_fraction == pytest.approx(0.9894)
    assert daily_budget(P, 600).idle_time_fraction == pytest.approx(0.99894)


def test_errors():
    with pytest.raises(PeriodTooShort):
        average_current(P, 0.5)
    with pytest.raises(PeriodTooShort):
        daily_budget(P, 0.636)
    with pytest.raises(ConfigError):
        EnergyProfile(i_sleep=0)


def test_periods():
    assert [parse_period(s) for s in ("10s", "1m", "10min", "1h", "2.5")] == [10, 60, 600, 3600, 2.5]
    with pytest.raises(ConfigError):
        parse_period("ten")
    assert [format_period(t) for t in (10, 60, 1800, 3600)] == ["10 s", "1 min", "30 min", "1 h"]


def test_override_per_algorithm():
    rows = energy_table([60], P, {"base": None, "heavy": 100.0})
    assert rows[1].current_ma > rows[0].current_ma
