"""Domain types for FTM ranging records.

All types are frozen dataclasses. RTTs are float nanoseconds, timestamps are
integer picoseconds, distances are meters and RSSI is dBm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import NoFrames, NoGroundTruth

SPEED_OF_LIGHT = 299_792_458.0  # m/s

RTT_MEAN_TOLERANCE_NS = 0.5
FRAME_RTT_TOLERANCE_NS = 0.5


class Bandwidth(enum.IntEnum):
    MHZ20 = 20
    MHZ40 = 40


class Scenario(str, enum.Enum):
    INDOOR = "indoor"
    OUTDOOR = "outdoor"
    TEST = "test"
    SYNTHETIC = "synthetic"


class ViolationCode(str, enum.Enum):
    FRAME_COUNT_MISMATCH = "FrameCountMismatch"
    RTT_RAW_NOT_MEAN = "RttRawNotMean"
    NEGATIVE_DISTANCE = "NegativeDistance"
    NEGATIVE_NUM_FRAMES = "NegativeNumFrames"
    TIMESTAMP_ORDER = "TimestampOrder"
    NEGATIVE_TIMESTAMP = "NegativeTimestamp"
    FRAME_RTT_MISMATCH = "FrameRttMismatch"
    NEGATIVE_FRAME_RTT = "NegativeFrameRtt"
    NON_FINITE = "NonFinite"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    detail: str = ""
    frame: Optional[int] = None

    def __str__(self) -> str:
        return self.code.value


@dataclass(frozen=True)
class FtmFrame:
    rssi: float
    rtt: float
    t1: Optional[int] = None
    t2: Optional[int] = None
    t3: Optional[int] = None
    t4: Optional[int] = None

    @property
    def has_timestamps(self) -> bool:
        return None not in (self.t1, self.t2, self.t3, self.t4)

    def rtt_from_timestamps(self) -> float:
        return ((self.t4 - self.t1) - (self.t3 - self.t2)) / 1000.0


@dataclass(frozen=True)
class FtmMeasurement:
    anchor_id: str
    rtt_raw: float
    frames: tuple[FtmFrame, ...] = ()
    num_frames: Optional[int] = None
    rtt_est: Optional[float] = None
    dist_est: Optional[float] = None
    own_est: Optional[float] = None
    bandwidth: Bandwidth = Bandwidth.MHZ20
    true_distance: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "anchor_id", str(self.anchor_id))
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "bandwidth", Bandwidth(int(self.bandwidth)))
        if self.num_frames is None:
            object.__setattr__(self, "num_frames", len(self.frames))

    @property
    def mean_rssi(self) -> float:
        if not self.frames:
            raise NoFrames(f"measurement from anchor {self.anchor_id} has no frames")
        return math.fsum(f.rssi for f in self.frames) / len(self.frames)


@dataclass(frozen=True)
class LabeledSample:
    rtt_raw: float
    mean_rssi: float
    true_distance: float
    source: str = ""


@dataclass(frozen=True)
class Dataset:
    name: str
    scenario: Scenario
    measurements: tuple[FtmMeasurement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "measurements", tuple(self.measurements))

    def __len__(self) -> int:
        return len(self.measurements)

    @property
    def bandwidths(self) -> set[Bandwidth]:
        return {m.bandwidth for m in self.measurements}

    def labeled_samples(self) -> list[LabeledSample]:
        return [to_labeled_sample(m, source=self.name) for m in self.measurements]


def _finite(x) -> bool:
    return x is None or math.isfinite(x)


def validate_measurement(m: FtmMeasurement) -> list[Violation]:
    """Return every invariant violation of ``m``; an empty list means valid."""
    out: list[Violation] = []
    scalars = (m.rtt_raw, m.rtt_est, m.dist_est, m.own_est, m.true_distance)
    if not all(_finite(v) for v in scalars):
        out.append(Violation(ViolationCode.NON_FINITE, "non-finite measurement field"))
        return out

    if m.num_frames < 0:
        out.append(Violation(ViolationCode.NEGATIVE_NUM_FRAMES, f"num_frames={m.num_frames}"))
    if m.num_frames != len(m.frames):
        out.append(
            Violation(
                ViolationCode.FRAME_COUNT_MISMATCH,
                f"num_frames={m.num_frames} but {len(m.frames)} frame(s)",
            )
        )
    for name in ("dist_est", "own_est", "true_distance"):
        v = getattr(m, name)
        if v is not None and v < 0:
            out.append(Violation(ViolationCode.NEGATIVE_DISTANCE, f"{name}={v}"))

    for k, f in enumerate(m.frames):
        if not (math.isfinite(f.rssi) and math.isfinite(f.rtt)):
            out.append(Violation(ViolationCode.NON_FINITE, "non-finite frame field", k))
            continue
        if not f.has_timestamps:
            continue
        if min(f.t1, f.t2, f.t3, f.t4) < 0:
            out.append(Violation(ViolationCode.NEGATIVE_TIMESTAMP, "", k))
            continue
        # t1/t4 are initiator clock, t2/t3 responder clock
        if f.t4 < f.t1 or f.t3 < f.t2:
            out.append(Violation(ViolationCode.TIMESTAMP_ORDER, "t4<t1 or t3<t2", k))
            continue
        recomputed = f.rtt_from_timestamps()
        if abs(recomputed - f.rtt) > FRAME_RTT_TOLERANCE_NS:
            out.append(
                Violation(
                    ViolationCode.FRAME_RTT_MISMATCH,
                    f"stored {f.rtt} ns vs timestamps {recomputed} ns",
                    k,
                )
            )

    if m.frames:
        mean_rtt = math.fsum(f.rtt for f in m.frames) / len(m.frames)
        if abs(mean_rtt - m.rtt_raw) > RTT_MEAN_TOLERANCE_NS:
            out.append(
                Violation(
                    ViolationCode.RTT_RAW_NOT_MEAN,
                    f"rtt_raw={m.rtt_raw} ns, frame mean={mean_rtt} ns",
                )
            )
    return out


def to_labeled_sample(m: FtmMeasurement, source: str = "") -> LabeledSample:
    """Reduce a measurement to the (rtt_raw, mean RSSI) -> distance training unit."""
    if not m.frames:
        raise NoFrames(f"measurement from anchor {m.anchor_id} has no frames")
    if m.true_distance is None:
        raise NoGroundTruth(f"measurement from anchor {m.anchor_id} has no true_distance")
    # fsum keeps the mean independent of frame order
    return LabeledSample(m.rtt_raw, m.mean_rssi, m.true_distance, source)


def samples_to_arrays(samples: Sequence[LabeledSample]):
    """Stack samples into an (n, 2) feature matrix and an (n,) target vector."""
    import numpy as np

    X = np.array([[s.rtt_raw, s.mean_rssi] for s in samples], dtype=np.float64).reshape(-1, 2)
    y = np.array([s.true_distance for s in samples], dtype=np.float64)
    return X, y
