"""Simulation of the FTM initiator/responder timestamp exchange.

For each frame the initiator stamps departure ``t1`` and the arrival of the
acknowledgement ``t4`` on its own clock; the responder stamps arrival ``t2``
and the acknowledgement departure ``t3`` on a different clock.  The RTT
``(t4 - t1) - (t3 - t2)`` cancels both the clock offset and the responder
turnaround, which is why the simulator draws a fresh random offset per
burst and a Gaussian turnaround per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Bandwidth, FtmFrame, FtmMeasurement
from .correction import PiecewiseLinearMap, apply_vendor_correction, distance_from_rtt, rtt_from_distance
from .errors import ConfigError, DataError, InvalidOrdering

# clock offsets are drawn below this bound (1 s in ps)
_MAX_CLOCK_OFFSET_PS = 10**12
_FRAME_INTERVAL_PS = 100_000_000  # 100 us between frames of a burst


@dataclass(frozen=True)
class ExchangeConfig:
    frames_per_burst: int = 8
    clock_resolution: int = 1  # ps per tick
    processing_delay_mean: float = 10_000.0  # ns, responder turnaround t3 - t2
    processing_delay_jitter: float = 50.0  # ns
    rng_seed: int = 0

    def __post_init__(self):
        if self.frames_per_burst < 1:
            raise ConfigError("frames_per_burst must be >= 1")
        if int(self.clock_resolution) != self.clock_resolution or self.clock_resolution < 1:
            raise ConfigError("clock_resolution must be an integer >= 1 ps")
        if self.processing_delay_mean < 0 or self.processing_delay_jitter < 0:
            raise ConfigError("processing delays must be >= 0")


@dataclass(frozen=True)
class NoiseModel:
    """Per-burst perturbations applied on top of the ideal ``2 d / c`` RTT.

    ``rtt_sigma`` is per-frame Gaussian jitter, ``bias`` a constant hardware
    offset and ``excess_delay`` the non-negative NLOS detour of this burst,
    all in ns.  Frame RSSI is ``rssi_mean`` plus per-frame jitter, rounded to
    ``rssi_quantum`` dB (0 disables rounding).
    """

    rtt_sigma: float = 0.0
    bias: float = 0.0
    excess_delay: float = 0.0
    rssi_mean: float = -40.0
    rssi_jitter: float = 0.0
    rssi_quantum: float = 1.0

    def __post_init__(self):
        if self.rtt_sigma < 0 or self.rssi_jitter < 0 or self.rssi_quantum < 0:
            raise ConfigError("noise sigmas must be >= 0")
        if self.excess_delay < 0:
            raise ConfigError("NLOS excess delay must be >= 0")


ZERO_NOISE = NoiseModel()


def rtt_from_timestamps(t1: int, t2: int, t3: int, t4: int) -> float:
    """RTT in ns from a picosecond timestamp quadruple.

    ``t2 >= t1`` is not required since the two sides run different clocks.
    """
    if t4 < t1 or t3 < t2:
        raise InvalidOrdering(f"need t4 >= t1 and t3 >= t2, got t1={t1} t2={t2} t3={t3} t4={t4}")
    return ((t4 - t1) - (t3 - t2)) / 1000.0


def simulate_exchange(
    true_distance: float,
    cfg: ExchangeConfig = ExchangeConfig(),
    noise: NoiseModel = ZERO_NOISE,
    *,
    anchor_id: str = "0",
    bandwidth: Bandwidth = Bandwidth.MHZ20,
    vendor_map: Optional[PiecewiseLinearMap] = None,
    rng: Optional[np.random.Generator] = None,
) -> FtmMeasurement:
    """Run one FTM burst at ``true_distance`` meters and return the measurement.

    ``rng`` overrides the stream derived from ``cfg.rng_seed``.  If a
    ``vendor_map`` is given, ``rtt_est``/``dist_est`` are filled the way the
    firmware would.
    """
    if not true_distance >= 0:
        raise DataError(f"true_distance must be >= 0, got {true_distance}")
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    res = int(cfg.clock_resolution)
    nf = cfg.frames_per_burst

    ideal_ns = rtt_from_distance(true_distance)
    rtt_ns = np.full(nf, ideal_ns + noise.bias + noise.excess_delay)
    if noise.rtt_sigma > 0:
        rtt_ns = rtt_ns + rng.normal(0.0, noise.rtt_sigma, nf)
    turn_ns = cfg.processing_delay_mean + (
        rng.normal(0.0, cfg.processing_delay_jitter, nf) if cfg.processing_delay_jitter > 0 else np.zeros(nf)
    )
    turn_ns = np.maximum(turn_ns, 0.0)
    init_offset = int(rng.integers(0, _MAX_CLOCK_OFFSET_PS // res))
    resp_offset = int(rng.integers(0, _MAX_CLOCK_OFFSET_PS // res))
    if noise.rssi_jitter > 0:
        rssi = noise.rssi_mean + rng.normal(0.0, noise.rssi_jitter, nf)
    else:
        rssi = np.full(nf, float(noise.rssi_mean))
    if noise.rssi_quantum > 0:
        rssi = np.round(rssi / noise.rssi_quantum) * noise.rssi_quantum

    frames = []
    interval_ticks = _FRAME_INTERVAL_PS // res
    for k in range(nf):
        rtt_ticks = int(round(rtt_ns[k] * 1000.0 / res))
        turn_ticks = int(round(turn_ns[k] * 1000.0 / res))
        # t4 >= t1 must hold even for absurdly negative noise draws
        rtt_ticks = max(rtt_ticks, -turn_ticks)
        fwd_ticks = int(round(ideal_ns * 500.0 / res))
        t1 = init_offset + k * interval_ticks
        t2 = resp_offset + k * interval_ticks + fwd_ticks
        t3 = t2 + turn_ticks
        t4 = t1 + turn_ticks + rtt_ticks
        t1, t2, t3, t4 = (v * res for v in (t1, t2, t3, t4))
        frames.append(FtmFrame(float(rssi[k]), rtt_from_timestamps(t1, t2, t3, t4), t1, t2, t3, t4))

    rtt_raw = round(math.fsum(f.rtt for f in frames) / nf, 3)
    rtt_est = dist_est = None
    if vendor_map is not None:
        rtt_est = round(float(apply_vendor_correction(rtt_raw, vendor_map)), 3)
        dist_est = round(max(0.0, distance_from_rtt(rtt_est)), 3)
    return FtmMeasurement(
        anchor_id=anchor_id,
        rtt_raw=rtt_raw,
        frames=tuple(frames),
        num_frames=nf,
        rtt_est=rtt_est,
        dist_est=dist_est,
        bandwidth=bandwidth,
        true_distance=round(float(true_distance), 3),
    )
