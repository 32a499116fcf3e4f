"""Synthetic radio environments that produce FTM datasets.

RSSI follows a log-distance path-loss law with Gaussian shadowing.  The RTT
of every burst carries a constant hardware bias, per-frame Gaussian jitter
whose size depends on the bandwidth, and, with probability
``nlos_probability``, an exponentially distributed excess delay standing in
for a missed first path.  The excess delay is never negative.

Presets are YAML files shipped in ``ftmkit/presets``.  Their numbers were
hand-tuned to give ECDF shapes like the public campaign and are calibration
artifacts, not measured constants.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import yaml

from .core import Bandwidth, Dataset, FtmMeasurement, Scenario
from .correction import PiecewiseLinearMap
from .errors import ConfigError, NonPositiveDistance
from .protocol import ExchangeConfig, NoiseModel, simulate_exchange

D0 = 1.0  # reference distance, m
# RSSI is evaluated at no less than this distance to keep log10 finite
_MIN_RSSI_DISTANCE = 0.1


@dataclass(frozen=True)
class ChannelModel:
    pathloss_exponent: float = 2.0
    pl0: float = -40.0
    shadowing_sigma: float = 0.0
    rtt_noise_sigma: Mapping[int, float] = field(default_factory=lambda: {20: 0.0, 40: 0.0})
    nlos_probability: float = 0.0
    nlos_excess_mean: float = 0.0
    rng_seed: int = 0
    rtt_bias: float = 0.0  # ns, constant hardware offset
    nlos_rssi_penalty: float = 0.0  # dB lost on NLOS bursts
    frame_rssi_jitter: float = 0.0  # dB per frame within a burst

    def __post_init__(self):
        sig = self.rtt_noise_sigma
        if isinstance(sig, (int, float)):
            sig = {20: float(sig), 40: float(sig)}
        object.__setattr__(self, "rtt_noise_sigma", {int(k): float(v) for k, v in sig.items()})
        if not 0.0 <= self.nlos_probability <= 1.0:
            raise ConfigError("nlos_probability must be in [0, 1]")
        if self.pathloss_exponent <= 0:
            raise ConfigError("pathloss_exponent must be > 0")
        sigmas = [self.shadowing_sigma, self.nlos_excess_mean, self.frame_rssi_jitter, *self.rtt_noise_sigma.values()]
        if any(s < 0 for s in sigmas):
            raise ConfigError("sigmas and means must be >= 0")

    def rtt_sigma_for(self, bandwidth) -> float:
        try:
            return self.rtt_noise_sigma[int(bandwidth)]
        except KeyError:
            raise ConfigError(f"no rtt_noise_sigma for {int(bandwidth)} MHz") from None


@dataclass(frozen=True)
class ScenarioSpec:
    anchor_positions: Sequence[Sequence[float]]
    tag_positions: Sequence[Sequence[float]]
    bandwidth: Bandwidth = Bandwidth.MHZ20
    dwell: int = 1
    channel: ChannelModel = ChannelModel()
    name: str = "synthetic"
    scenario: Scenario = Scenario.SYNTHETIC
    exchange: ExchangeConfig = ExchangeConfig()
    vendor_map: Optional[PiecewiseLinearMap] = None

    def __post_init__(self):
        anchors = tuple(tuple(float(c) for c in p) for p in self.anchor_positions)
        tags = tuple(tuple(float(c) for c in p) for p in self.tag_positions)
        object.__setattr__(self, "anchor_positions", anchors)
        object.__setattr__(self, "tag_positions", tags)
        object.__setattr__(self, "bandwidth", Bandwidth(int(self.bandwidth)))
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if not anchors or not tags:
            raise ConfigError("need at least one anchor and one tag position")
        if self.dwell < 1:
            raise ConfigError("dwell must be >= 1")
        dims = {len(p) for p in anchors + tags}
        if len(dims) != 1 or dims.pop() not in (2, 3):
            raise ConfigError("positions must all be 2D or all 3D")

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return replace(self, channel=replace(self.channel, rng_seed=int(seed)))


def rssi_at(d: float, ch: ChannelModel, rng: Optional[np.random.Generator] = None) -> float:
    """Log-distance path loss with Gaussian shadowing, in dBm."""
    if not d > 0:
        raise NonPositiveDistance(f"distance must be > 0, got {d}")
    value = ch.pl0 - 10.0 * ch.pathloss_exponent * math.log10(d / D0)
    if ch.shadowing_sigma > 0:
        if rng is None:
            raise ConfigError("an rng is required when shadowing_sigma > 0")
        value += rng.normal(0.0, ch.shadowing_sigma)
    return value


def _position_stream(seed: int, position_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(position_index)])


def _generate_position(spec: ScenarioSpec, p_index: int) -> list[FtmMeasurement]:
    ch = spec.channel
    rng = _position_stream(ch.rng_seed, p_index)
    tag = np.asarray(spec.tag_positions[p_index])
    sigma = ch.rtt_sigma_for(spec.bandwidth)
    out = []
    for a_index, anchor in enumerate(spec.anchor_positions):
        d = float(np.linalg.norm(tag - np.asarray(anchor)))
        for _ in range(spec.dwell):
            nlos = ch.nlos_probability > 0 and rng.random() < ch.nlos_probability
            excess = float(rng.exponential(ch.nlos_excess_mean)) if nlos and ch.nlos_excess_mean > 0 else 0.0
            rssi = rssi_at(max(d, _MIN_RSSI_DISTANCE), ch, rng)
            if nlos:
                rssi -= ch.nlos_rssi_penalty
            noise = NoiseModel(
                rtt_sigma=sigma,
                bias=ch.rtt_bias,
                excess_delay=excess,
                rssi_mean=rssi,
                rssi_jitter=ch.frame_rssi_jitter,
            )
            out.append(
                simulate_exchange(
                    d,
                    spec.exchange,
                    noise,
                    anchor_id=f"A{a_index}",
                    bandwidth=spec.bandwidth,
                    vendor_map=spec.vendor_map,
                    rng=rng,
                )
            )
    return out


def generate_dataset(spec: ScenarioSpec, workers: int = 1) -> Dataset:
    """Simulate every (tag position, anchor, repeat) triple of ``spec``.

    Each tag position draws from its own RNG stream derived from the channel
    seed, so the result does not depend on ``workers``.
    """
    indices = range(len(spec.tag_positions))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda i: _generate_position(spec, i), indices))
    else:
        chunks = [_generate_position(spec, i) for i in indices]
    return Dataset(spec.name, spec.scenario, tuple(m for c in chunks for m in c))


# ---------------------------------------------------------------- presets

PresetSource = Union[str, Path, Mapping]


def list_presets() -> list[str]:
    root = resources.files("ftmkit") / "presets"
    names = []
    for entry in root.iterdir():
        if entry.name.endswith(".yaml") and not entry.name.startswith("vendor"):
            names.append(entry.name[: -len(".yaml")])
    return sorted(names)


def _read_yaml(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc


def _preset_path(name: str):
    path = resources.files("ftmkit") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path


def _expand_positions(raw) -> list[list[float]]:
    if isinstance(raw, Mapping) and "line" in raw:
        line = raw["line"]
        start = np.asarray(line["start"], dtype=float)
        end = np.asarray(line["end"], dtype=float)
        count = int(line["count"])
        if count < 1:
            raise ConfigError("line.count must be >= 1")
        ts = np.linspace(0.0, 1.0, count) if count > 1 else np.zeros(1)
        return [list(np.round(start + t * (end - start), 6)) for t in ts]
    return [list(p) for p in raw]


def load_preset(source: PresetSource, seed: Optional[int] = None) -> ScenarioSpec:
    """Build a :class:`ScenarioSpec` from a preset name, a YAML path or a dict."""
    base_dir = None
    if isinstance(source, Mapping):
        cfg = dict(source)
    elif isinstance(source, Path) or (isinstance(source, str) and source.endswith((".yaml", ".yml"))):
        cfg = _read_yaml(source)
        base_dir = Path(source).parent
    else:
        cfg = _read_yaml(_preset_path(str(source)))

    try:
        ch = dict(cfg.get("channel", {}))
        channel = ChannelModel(**ch)
        ex = ExchangeConfig(**cfg.get("exchange", {}))
        vendor = cfg.get("vendor_map")
        vendor_map = None
        if isinstance(vendor, str):
            if vendor.endswith((".yaml", ".yml")) and base_dir is not None:
                vendor_map = PiecewiseLinearMap.from_dict(_read_yaml(base_dir / vendor))
            else:
                vendor_map = PiecewiseLinearMap.from_dict(_read_yaml(_preset_path(vendor)))
        elif isinstance(vendor, Mapping):
            vendor_map = PiecewiseLinearMap.from_dict(vendor)
        spec = ScenarioSpec(
            anchor_positions=_expand_positions(cfg["anchors"]),
            tag_positions=_expand_positions(cfg["tags"]),
            bandwidth=Bandwidth(int(cfg.get("bandwidth", 20))),
            dwell=int(cfg.get("dwell", 1)),
            channel=channel,
            name=str(cfg.get("name", "synthetic")),
            scenario=Scenario(cfg.get("scenario", "synthetic")),
            exchange=ex,
            vendor_map=vendor_map,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed preset: {exc}") from exc
    return spec.with_seed(seed) if seed is not None else spec
