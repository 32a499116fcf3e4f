import numpy as np
import pytest

from ftmkit.core import SPEED_OF_LIGHT, validate_measurement
from ftmkit.correction import distance_from_rtt
from ftmkit.errors import ConfigError, DataError, InvalidOrdering
from ftmkit.protocol import ExchangeConfig, NoiseModel, rtt_from_timestamps, simulate_exchange


def test_rtt_from_timestamps():
    assert rtt_from_timestamps(0, 5_000, 15_000, 76_713) == 66.713
    # clock offset between devices cancels
    assert rtt_from_timestamps(10**9, 5, 10_005, 10**9 + 76_713) == 66.713
    with pytest.raises(InvalidOrdering):
        rtt_from_timestamps(100, 0, 10, 50)


def test_zero_noise_recovers_distance():
    rng = np.random.default_rng(3)
    tick = ExchangeConfig().clock_resolution
    for d in rng.uniform(0.5, 50, 50):
        m = simulate_exchange(float(d), rng=rng)
        assert validate_measurement(m) == []
        assert abs(distance_from_rtt(m.rtt_raw) - d) <= SPEED_OF_LIGHT * tick * 1e-12 / 2


def test_coarse_clock_error_bounded_by_half_tick():
    cfg = ExchangeConfig(clock_resolution=1000)  # 1 ns ticks
    rng = np.random.default_rng(4)
    for d in rng.uniform(0.5, 50, 50):
        m = simulate_exchange(float(d), cfg, rng=rng)
        assert abs(m.rtt_raw - 2 * d / SPEED_OF_LIGHT * 1e9) <= 0.5 + 1e-9


def test_noise_bias_shifts_mean():
    rng = np.random.default_rng(5)
    noise = NoiseModel(rtt_sigma=2.0, bias=10.0)
    cfg = ExchangeConfig(frames_per_burst=64)
    errs = [simulate_exchange(5.0, cfg, noise, rng=rng).rtt_raw - 2 * 5.0 / SPEED_OF_LIGHT * 1e9 for _ in range(50)]
    assert abs(np.mean(errs) - 10.0) < 0.2


def test_same_seed_same_measurement():
    a = simulate_exchange(7.0, ExchangeConfig(rng_seed=9), NoiseModel(rtt_sigma=1.0, rssi_jitter=2.0))
    b = simulate_exchange(7.0, ExchangeConfig(rng_seed=9), NoiseModel(rtt_sigma=1.0, rssi_jitter=2.0))
    assert a == b


def test_bad_inputs():
    with pytest.raises(DataError):
        simulate_exchange(-1.0)
    with pytest.raises(ConfigError):
        NoiseModel(excess_delay=-1.0)
