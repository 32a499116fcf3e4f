"""Dataset files, external log ingestion and experiment configs.

DatasetFileV1 is UTF-8 text with ``\\n`` line endings::

    # ftmkit-dataset v1
    # name=<dataset name>
    # scenario=<indoor|outdoor|test|synthetic>
    # bandwidth_mhz=<20|40>
    # units rtt=ns distance=m rssi=dBm timestamp=ps
    [measurements]
    index,anchor_id,rtt_raw_ns,rtt_est_ns,dist_est_m,own_est_m,num_frames,true_distance_m
    0,A0,66.713,,,,8,10.000
    [frames]
    measurement,frame,rssi_dbm,rtt_ns,t1_ps,t2_ps,t3_ps,t4_ps
    0,0,-40.00,66.700,1000,5000,15000,76700

RTTs and distances carry 3 decimals, RSSI 2, timestamps are integers.
Absent optional values are empty cells.  Measurement indices run 0..n-1 and
frame rows are sorted by (measurement, frame) with frame indices 0..k-1.
Fields are CSV-quoted only when they contain a comma or a quote.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import re
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .core import Bandwidth, Dataset, FtmFrame, FtmMeasurement, Scenario, validate_measurement
from .errors import (
    ConfigError,
    DataError,
    IoFailure,
    MissingRequiredColumn,
    ParseError,
    UnitMismatch,
    UnsupportedVersion,
    ValidationFailed,
)

FORMAT_TAG = "ftmkit-dataset"
FORMAT_VERSION = 1
UNITS_LINE = "# units rtt=ns distance=m rssi=dBm timestamp=ps"
MEASUREMENT_COLUMNS = (
    "index",
    "anchor_id",
    "rtt_raw_ns",
    "rtt_est_ns",
    "dist_est_m",
    "own_est_m",
    "num_frames",
    "true_distance_m",
)
FRAME_COLUMNS = ("measurement", "frame", "rssi_dbm", "rtt_ns", "t1_ps", "t2_ps", "t3_ps", "t4_ps")


def _fmt(v: Optional[float], places: int) -> str:
    if v is None:
        return ""
    s = f"{v:.{places}f}"
    # never emit "-0.000"
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def _fmt_int(v: Optional[int]) -> str:
    return "" if v is None else str(int(v))


def _csv_line(fields) -> str:
    buf = _io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(fields)
    return buf.getvalue()


def encode_dataset(d: Dataset) -> str:
    """Canonical DatasetFileV1 text for ``d``."""
    bws = d.bandwidths
    if len(bws) > 1:
        raise DataError("a DatasetFileV1 file holds one bandwidth; split the dataset per bandwidth first")
    bw = bws.pop() if bws else Bandwidth.MHZ20
    if "\n" in d.name or "\r" in d.name:
        raise DataError("dataset name must be a single line")
    out = [
        f"# {FORMAT_TAG} v{FORMAT_VERSION}\n",
        f"# name={d.name}\n",
        f"# scenario={d.scenario.value}\n",
        f"# bandwidth_mhz={int(bw)}\n",
        UNITS_LINE + "\n",
        "[measurements]\n",
        ",".join(MEASUREMENT_COLUMNS) + "\n",
    ]
    frames = ["[frames]\n", ",".join(FRAME_COLUMNS) + "\n"]
    for i, m in enumerate(d.measurements):
        if m.anchor_id == "" or "\n" in m.anchor_id:
            raise DataError(f"measurement {i}: anchor_id must be a non-empty single line")
        out.append(
            _csv_line(
                [
                    i,
                    m.anchor_id,
                    _fmt(m.rtt_raw, 3),
                    _fmt(m.rtt_est, 3),
                    _fmt(m.dist_est, 3),
                    _fmt(m.own_est, 3),
                    m.num_frames,
                    _fmt(m.true_distance, 3),
                ]
            )
        )
        for k, f in enumerate(m.frames):
            frames.append(
                ",".join(
                    [str(i), str(k), _fmt(f.rssi, 2), _fmt(f.rtt, 3)] + [_fmt_int(t) for t in (f.t1, f.t2, f.t3, f.t4)]
                )
                + "\n"
            )
    return "".join(out + frames)


def write_dataset(d: Dataset, path) -> None:
    text = encode_dataset(d)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ------------------------------------------------------------------ reading


def _num(cell: str, line: int, col: int, name: str, optional: bool) -> Optional[float]:
    if cell == "":
        if optional:
            return None
        raise ParseError(line, f"{name} is required", col)
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(line, f"{name}: not a number: {cell!r}", col) from None
    return v


def _int(cell: str, line: int, col: int, name: str, optional: bool = False) -> Optional[int]:
    if cell == "":
        if optional:
            return None
        raise ParseError(line, f"{name} is required", col)
    if not re.fullmatch(r"-?\d+", cell):
        raise ParseError(line, f"{name}: not an integer: {cell!r}", col)
    return int(cell)


def _header_value(line_no: int, text: str, key: str) -> str:
    prefix = f"# {key}="
    if not text.startswith(prefix):
        raise ParseError(line_no, f"expected '{prefix}...'")
    return text[len(prefix) :]


def decode_dataset(text: str, lenient: bool = False, source: str = "<string>") -> Dataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, "empty file")
    m = re.fullmatch(rf"# {FORMAT_TAG} v(\d+)", lines[0].rstrip("\r"))
    if not m:
        raise ParseError(1, f"missing '# {FORMAT_TAG} v1' header")
    if int(m.group(1)) != FORMAT_VERSION:
        raise UnsupportedVersion(f"{source}: dataset format v{m.group(1)} (supported: v{FORMAT_VERSION})")
    if len(lines) < 7:
        raise ParseError(len(lines) + 1, "truncated header")
    name = _header_value(2, lines[1], "name")
    try:
        scenario = Scenario(_header_value(3, lines[2], "scenario"))
    except ValueError:
        raise ParseError(3, f"unknown scenario in {lines[2]!r}") from None
    try:
        bandwidth = Bandwidth(int(_header_value(4, lines[3], "bandwidth_mhz")))
    except ValueError:
        raise ParseError(4, f"unsupported bandwidth in {lines[3]!r}") from None
    if lines[4] != UNITS_LINE:
        raise ParseError(5, f"units line must read {UNITS_LINE!r}")
    if lines[5] != "[measurements]":
        raise ParseError(6, "expected [measurements]")
    if lines[6] != ",".join(MEASUREMENT_COLUMNS):
        raise ParseError(7, "bad measurement column header")

    rows: list[dict] = []
    n = 7
    while n < len(lines) and lines[n] != "[frames]":
        line_no = n + 1
        cells = next(csv.reader([lines[n]]))
        if len(cells) != len(MEASUREMENT_COLUMNS):
            raise ParseError(line_no, f"expected {len(MEASUREMENT_COLUMNS)} fields, got {len(cells)}")
        idx = _int(cells[0], line_no, 1, "index")
        if idx != len(rows):
            raise ParseError(line_no, f"measurement index {idx} out of sequence (expected {len(rows)})", 1)
        if cells[1] == "":
            raise ParseError(line_no, "anchor_id is required", 2)
        rows.append(
            dict(
                line=line_no,
                anchor_id=cells[1],
                rtt_raw=_num(cells[2], line_no, 3, "rtt_raw_ns", False),
                rtt_est=_num(cells[3], line_no, 4, "rtt_est_ns", True),
                dist_est=_num(cells[4], line_no, 5, "dist_est_m", True),
                own_est=_num(cells[5], line_no, 6, "own_est_m", True),
                num_frames=_int(cells[6], line_no, 7, "num_frames"),
                true_distance=_num(cells[7], line_no, 8, "true_distance_m", True),
                frames=[],
                frame_lines=[],
            )
        )
        n += 1
    if n >= len(lines):
        raise ParseError(n + 1, "missing [frames] section")
    n += 1
    if n >= len(lines) or lines[n] != ",".join(FRAME_COLUMNS):
        raise ParseError(n + 1, "bad frame column header")
    n += 1
    last = (-1, -1)
    for j in range(n, len(lines)):
        line_no = j + 1
        cells = lines[j].split(",")
        if len(cells) != len(FRAME_COLUMNS):
            raise ParseError(line_no, f"expected {len(FRAME_COLUMNS)} fields, got {len(cells)}")
        mi = _int(cells[0], line_no, 1, "measurement")
        fi = _int(cells[1], line_no, 2, "frame")
        if not 0 <= mi < len(rows):
            raise ParseError(line_no, f"frame references unknown measurement {mi}", 1)
        expected = last[1] + 1 if mi == last[0] else 0
        if mi < last[0] or fi != expected:
            raise ParseError(line_no, f"frame rows must be sorted and contiguous (got {mi},{fi})", 2)
        last = (mi, fi)
        ts = [_int(cells[c], line_no, c + 1, FRAME_COLUMNS[c], True) for c in range(4, 8)]
        if any(t is None for t in ts) and any(t is not None for t in ts):
            raise ParseError(line_no, "timestamps must be all present or all absent", 5)
        rows[mi]["frames"].append(
            FtmFrame(
                rssi=_num(cells[2], line_no, 3, "rssi_dbm", False),
                rtt=_num(cells[3], line_no, 4, "rtt_ns", False),
                t1=ts[0],
                t2=ts[1],
                t3=ts[2],
                t4=ts[3],
            )
        )
        rows[mi]["frame_lines"].append(line_no)

    measurements = []
    for r in rows:
        meas = FtmMeasurement(
            anchor_id=r["anchor_id"],
            rtt_raw=r["rtt_raw"],
            frames=tuple(r["frames"]),
            num_frames=r["num_frames"],
            rtt_est=r["rtt_est"],
            dist_est=r["dist_est"],
            own_est=r["own_est"],
            bandwidth=bandwidth,
            true_distance=r["true_distance"],
        )
        for v in validate_measurement(meas):
            line = r["frame_lines"][v.frame] if v.frame is not None else r["line"]
            if not lenient:
                raise ValidationFailed(line, v.code.value, v.detail)
            warnings.warn(f"{source}: line {line}: {v.code.value} {v.detail}".rstrip(), stacklevel=2)
        measurements.append(meas)
    if not measurements:
        warnings.warn(f"{source}: dataset has no measurements", stacklevel=2)
    return Dataset(name, scenario, tuple(measurements))


def read_dataset(path, lenient: bool = False) -> Dataset:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_dataset(text, lenient=lenient, source=str(path))


# ------------------------------------------------------- external ingestion

_RTT_UNITS = {"s": 1e9, "ms": 1e6, "us": 1e3, "ns": 1.0, "ps": 1e-3}
_DIST_UNITS = {"km": 1e3, "m": 1.0, "cm": 1e-2, "mm": 1e-3}
_TS_UNITS = {"s": 1e12, "ms": 1e9, "us": 1e6, "ns": 1e3, "ps": 1.0}
_UNIT_TABLES = {"rtt": _RTT_UNITS, "distance": _DIST_UNITS, "timestamp": _TS_UNITS}
_FIELD_QUANTITY = {
    "rtt_raw": "rtt",
    "rtt_est": "rtt",
    "frame_rtt": "rtt",
    "dist_est": "distance",
    "own_est": "distance",
    "true_distance": "distance",
    "t1": "timestamp",
    "t2": "timestamp",
    "t3": "timestamp",
    "t4": "timestamp",
}
_KNOWN_FIELDS = set(_FIELD_QUANTITY) | {"anchor_id", "num_frames", "frame_rssi", "bandwidth"}


@dataclass(frozen=True)
class ImportMapping:
    """How a foreign CSV log maps onto DatasetFileV1 fields.

    ``columns`` maps toolkit field names to source column names.  Frame
    fields (``frame_rssi``, ``frame_rtt``, ``t1``..``t4``) make every source
    row one frame, and rows sharing the ``group_by`` columns form one
    measurement.  Without frame fields each row is a frameless measurement.
    """

    columns: Mapping[str, str]
    units: Mapping[str, str] = field(default_factory=dict)
    group_by: tuple[str, ...] = ()
    name: str = "imported"
    scenario: Scenario = Scenario.TEST
    bandwidth: Optional[int] = None
    delimiter: str = ","
    format: str = "csv"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ImportMapping":
        doc = dict(doc or {})
        fmt = doc.get("format", "csv")
        if fmt not in ("csv", "ftmkit-v1"):
            raise ConfigError(f"unknown import format {fmt!r}")
        columns = dict(doc.get("columns") or {})
        unknown = set(columns) - _KNOWN_FIELDS
        if unknown:
            raise ConfigError(f"unknown mapping field(s): {', '.join(sorted(unknown))}")
        units = dict(doc.get("units") or {})
        for key, unit in units.items():
            table = _UNIT_TABLES.get(key)
            if table is None:
                raise UnitMismatch(f"unit given for unknown quantity {key!r}")
            if unit not in table:
                raise UnitMismatch(f"{unit!r} is not a {key} unit (allowed: {', '.join(table)})")
        try:
            scenario = Scenario(doc.get("scenario", "test"))
        except ValueError:
            raise ConfigError(f"unknown scenario {doc.get('scenario')!r}") from None
        gb = doc.get("group_by") or ()
        return cls(
            columns=columns,
            units=units,
            group_by=(gb,) if isinstance(gb, str) else tuple(gb),
            name=str(doc.get("name", "imported")),
            scenario=scenario,
            bandwidth=doc.get("bandwidth"),
            delimiter=str(doc.get("delimiter", ",")),
            format=fmt,
        )

    def scale(self, fieldname: str) -> float:
        q = _FIELD_QUANTITY[fieldname]
        default = {"rtt": "ns", "distance": "m", "timestamp": "ps"}[q]
        return _UNIT_TABLES[q][self.units.get(q, default)]


def load_mapping(path) -> ImportMapping:
    try:
        with open(path, encoding="utf-8") as fh:
            return ImportMapping.from_dict(yaml.safe_load(fh) or {})
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc


def import_external(path, mapping: ImportMapping | Mapping | None = None, lenient: bool = False) -> Dataset:
    """Convert a foreign log to a :class:`Dataset` through ``mapping``.

    ``mapping=None`` or ``format: ftmkit-v1`` reads a DatasetFileV1 file.
    """
    if mapping is None:
        return read_dataset(path, lenient=lenient)
    if not isinstance(mapping, ImportMapping):
        mapping = ImportMapping.from_dict(mapping)
    if mapping.format == "ftmkit-v1":
        return read_dataset(path, lenient=lenient)
    cols = mapping.columns
    frame_mode = any(k in cols for k in ("frame_rssi", "frame_rtt", "t1", "t2", "t3", "t4"))
    if "anchor_id" not in cols:
        raise MissingRequiredColumn("mapping must name the anchor_id column")
    if frame_mode:
        for k in ("frame_rssi", "frame_rtt"):
            if k not in cols:
                raise MissingRequiredColumn(f"frame rows need a {k} column")
        if not mapping.group_by:
            raise ConfigError("frame-row mappings need group_by columns")
    elif "rtt_raw" not in cols:
        raise MissingRequiredColumn("mapping must name the rtt_raw column")
    if mapping.bandwidth is None and "bandwidth" not in cols:
        raise MissingRequiredColumn("give a bandwidth constant or a bandwidth column")

    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh, delimiter=mapping.delimiter)
            header = next(reader, None)
            body = list(reader)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if header is None:
        raise ParseError(1, "empty file")
    header = [h.strip() for h in header]
    pos = {h: i for i, h in enumerate(header)}
    for src in list(cols.values()) + list(mapping.group_by):
        if src not in pos:
            raise MissingRequiredColumn(f"column {src!r} not found in {path}")

    def get(row, line, fieldname, optional=True, integer=False):
        if fieldname not in cols:
            return None
        c = pos[cols[fieldname]]
        cell = row[c].strip() if c < len(row) else ""
        if fieldname in ("anchor_id",):
            if not cell:
                raise ParseError(line, "anchor_id is empty", c + 1)
            return cell
        v = _num(cell, line, c + 1, cols[fieldname], optional)
        if v is None:
            return None
        if fieldname in _FIELD_QUANTITY:
            v = v * mapping.scale(fieldname)
        if integer or fieldname in ("t1", "t2", "t3", "t4", "num_frames", "bandwidth"):
            return int(round(v))
        return v

    groups: "OrderedDict[tuple, list]" = OrderedDict()
    for r, row in enumerate(body):
        line = r + 2
        if not any(cell.strip() for cell in row):
            continue
        key = tuple(row[pos[g]] for g in mapping.group_by) if frame_mode else (r,)
        groups.setdefault(key, []).append((line, row))

    measurements = []
    for key, rows in groups.items():
        line0, first = rows[0]
        bw = mapping.bandwidth if mapping.bandwidth is not None else get(first, line0, "bandwidth", False)
        try:
            bw = Bandwidth(int(bw))
        except ValueError:
            raise ParseError(line0, f"unsupported bandwidth {bw}") from None
        frames = ()
        if frame_mode:
            frames = tuple(
                FtmFrame(
                    rssi=get(row, ln, "frame_rssi", False),
                    rtt=get(row, ln, "frame_rtt", False),
                    t1=get(row, ln, "t1"),
                    t2=get(row, ln, "t2"),
                    t3=get(row, ln, "t3"),
                    t4=get(row, ln, "t4"),
                )
                for ln, row in rows
            )
        rtt_raw = get(first, line0, "rtt_raw", optional=frame_mode)
        if rtt_raw is None:
            rtt_raw = math.fsum(f.rtt for f in frames) / len(frames)
        num_frames = get(first, line0, "num_frames")
        meas = FtmMeasurement(
            anchor_id=get(first, line0, "anchor_id"),
            rtt_raw=rtt_raw,
            frames=frames,
            num_frames=len(frames) if num_frames is None else num_frames,
            rtt_est=get(first, line0, "rtt_est"),
            dist_est=get(first, line0, "dist_est"),
            own_est=get(first, line0, "own_est"),
            bandwidth=bw,
            true_distance=get(first, line0, "true_distance"),
        )
        for v in validate_measurement(meas):
            if not lenient:
                raise ValidationFailed(line0, v.code.value, v.detail)
            warnings.warn(f"{path}: line {line0}: {v.code.value}", stacklevel=2)
        measurements.append(meas)
    if not measurements:
        warnings.warn(f"{path}: no measurements imported", stacklevel=2)
    return Dataset(mapping.name, mapping.scenario, tuple(measurements))


# ------------------------------------------------------- experiment config


@dataclass(frozen=True)
class SourceSpec:
    preset: Optional[str] = None
    path: Optional[str] = None
    mapping: Optional[str] = None
    seed_offset: int = 0


@dataclass(frozen=True)
class EstimatorSpec:
    variant: str
    space: Optional[dict] = None
    fixed: dict = field(default_factory=dict)
    budget: int = 30
    strategy: str = "random"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    sources: tuple[SourceSpec, ...]
    estimators: tuple[EstimatorSpec, ...]
    train_fraction: float = 0.7
    folds: int = 5
    target_mode: str = "absolute"
    output_dir: str = "out"
    raw: dict = field(default_factory=dict, compare=False)

    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(doc: Any) -> str:
    """SHA-256 of the canonical JSON form of ``doc``."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def experiment_config_from_dict(doc: Mapping) -> ExperimentConfig:
    doc = dict(doc or {})
    if "seed" not in doc or isinstance(doc["seed"], bool) or not isinstance(doc["seed"], int):
        raise ConfigError("experiment config needs an integer 'seed'")
    sources = []
    for s in doc.get("sources") or []:
        if isinstance(s, str):
            s = {"preset": s}
        if not isinstance(s, Mapping) or (("preset" in s) == ("path" in s)):
            raise ConfigError("each source needs exactly one of 'preset' or 'path'")
        sources.append(SourceSpec(s.get("preset"), s.get("path"), s.get("mapping"), int(s.get("seed_offset", 0))))
    if not sources:
        raise ConfigError("experiment config needs at least one source")
    ests = []
    raw_est = doc.get("estimators") or {"tree": {}}
    if isinstance(raw_est, list):
        raw_est = {name: {} for name in raw_est}
    for name, e in raw_est.items():
        e = dict(e or {})
        ests.append(
            EstimatorSpec(
                name,
                e.get("space"),
                dict(e.get("fixed") or {}),
                int(e.get("budget", 30)),
                str(e.get("strategy", "random")),
            )
        )
    split = dict(doc.get("split") or {})
    return ExperimentConfig(
        seed=int(doc["seed"]),
        sources=tuple(sources),
        estimators=tuple(ests),
        train_fraction=float(split.get("train_fraction", 0.7)),
        folds=int(split.get("folds", 5)),
        target_mode=str(doc.get("target_mode", "absolute")),
        output_dir=str(doc.get("output", "out")),
        raw=doc,
    )


def load_experiment_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return experiment_config_from_dict(doc)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, meta: Optional[Mapping] = None) -> Path:
    """List every file under ``out_dir`` with its SHA-256 in ``manifest.json``."""
    out = Path(out_dir)
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    doc = {
        "meta": dict(meta or {}),
        "artifacts": [
            {"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size, "sha256": sha256_file(p)} for p in files
        ],
    }
    target = out / "manifest.json"
    try:
        target.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {target}: {exc}") from exc
    return target
