"""Compact, versioned binary encoding of trained models.

Layout (all little-endian)::

    offset size  field
    0      4     magic b"FTMM"
    4      2     u16 format version (1)
    6      1     u8  variant: 0 tree, 1 svr, 2 gp, 3 nn
    7      1     u8  target mode: 0 absolute, 1 correction
    8      1     u8  feature count (2: rtt_raw ns, mean_rssi dBm)
    9      1     u8  kernel: 0 gaussian, 1 exponential, 255 none
    10     2     u16 reserved, zero
    12     32    f64[4] feature means (2) then feature stds (2)
    44     16    f64[2] target mean, target std
    60     4     u32 record count N
    64     ...   variant block
    end-4  4     u32 CRC-32 of every preceding byte

Variant blocks:

tree
    N records of ``i32 feature, i32 left, i32 right, f64 threshold,
    f64 value`` (28 bytes).  ``feature == -1`` marks a leaf.  Node 0 is the
    root.  Go left when ``x[feature] <= threshold``.
svr
    ``f64 sigma_f, f64 sigma_l, f64 bias`` then N records of
    ``f64 x0, f64 x1, f64 coef``.
gp
    ``f64 sigma_f, f64 sigma_l, f64 noise_sigma`` then N records of
    ``f64 x0, f64 x1, f64 weight``.
nn
    ``f64 b2`` then N (= hidden width) records of
    ``f64 w1_0, f64 w1_1, f64 b1, f64 w2``.

Features are normalized ``(x - mean) / std`` before the variant is
evaluated.  The output is scaled back as ``z * target_std + target_mean``.
In correction mode the raw RTT distance is then added.  The result is
clamped at 0.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import DataError, IoFailure, UnsupportedVariant, UnsupportedVersion
from .gp import GpEstimator
from .kernels import KernelParams
from .model import TrainedModel
from .nn import NnEstimator
from .normalize import Normalizer
from .svr import SvrEstimator
from .tree import TreeEstimator

MAGIC = b"FTMM"
VERSION = 1
_VARIANT_CODES = {"tree": 0, "svr": 1, "gp": 2, "nn": 3}
_MODE_CODES = {"absolute": 0, "correction": 1}
_KERNEL_CODES = {"gaussian": 0, "exponential": 1}
_HEADER = struct.Struct("<4sHBBBBH4d2dI")
_TREE_NODE = struct.Struct("<iiidd")
_ROW3 = struct.Struct("<3d")
_ROW4 = struct.Struct("<4d")


def export_compact(model: TrainedModel) -> bytes:
    if model.variant not in _VARIANT_CODES:
        raise UnsupportedVariant(model.variant)
    est = model.estimator
    kernel_code = 255
    body = bytearray()
    if model.variant == "tree":
        records = len(est.feature)
        for k in range(records):
            body += _TREE_NODE.pack(
                int(est.feature[k]), int(est.left[k]), int(est.right[k]), float(est.threshold[k]), float(est.value[k])
            )
    elif model.variant in ("svr", "gp"):
        kernel_code = _KERNEL_CODES[est.kernel.kind]
        if model.variant == "svr":
            pts, coef = est.support_vectors, est.dual_coef
            body += _ROW3.pack(est.kernel.sigma_f, est.kernel.sigma_l, est.bias)
        else:
            pts, coef = est.X, est.weights
            body += _ROW3.pack(est.kernel.sigma_f, est.kernel.sigma_l, est.kernel.noise_sigma)
        records = len(coef)
        for k in range(records):
            body += _ROW3.pack(float(pts[k, 0]), float(pts[k, 1]), float(coef[k]))
    else:
        records = est.hidden
        body += struct.pack("<d", float(est.b2[0]))
        for k in range(records):
            body += _ROW4.pack(float(est.W1[k, 0]), float(est.W1[k, 1]), float(est.b1[k]), float(est.W2[0, k]))
    head = _HEADER.pack(
        MAGIC,
        VERSION,
        _VARIANT_CODES[model.variant],
        _MODE_CODES[model.target_mode],
        2,
        kernel_code,
        0,
        *model.normalizer.means,
        *model.normalizer.stds,
        model.target_mean,
        model.target_std,
        records,
    )
    blob = head + bytes(body)
    return blob + struct.pack("<I", zlib.crc32(blob))


def import_compact(blob: bytes) -> TrainedModel:
    if len(blob) < _HEADER.size + 4 or blob[:4] != MAGIC:
        raise DataError("not a compact model file (bad magic)")
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) != crc:
        raise DataError("compact model checksum mismatch")
    (magic, version, vcode, mcode, nfeat, kcode, _res, m0, m1, s0, s1, t_mean, t_std, records) = _HEADER.unpack_from(
        blob, 0
    )
    if version != VERSION:
        raise UnsupportedVersion(f"compact model version {version} (supported: {VERSION})")
    if nfeat != 2:
        raise DataError(f"expected 2 features, file has {nfeat}")
    variants = {v: k for k, v in _VARIANT_CODES.items()}
    if vcode not in variants:
        raise UnsupportedVariant(f"variant code {vcode}")
    variant = variants[vcode]
    mode = {v: k for k, v in _MODE_CODES.items()}[mcode]
    kinds = {v: k for k, v in _KERNEL_CODES.items()}
    off = _HEADER.size
    body_end = len(blob) - 4

    def rows(st: struct.Struct, count: int, start: int) -> np.ndarray:
        end = start + st.size * count
        if end != body_end:
            raise DataError("compact model payload has the wrong length")
        return np.frombuffer(blob[start:end], dtype=np.dtype("<f8")).reshape(count, -1).astype(np.float64)

    if variant == "tree":
        end = off + _TREE_NODE.size * records
        if end != body_end:
            raise DataError("compact model payload has the wrong length")
        dt = np.dtype([("f", "<i4"), ("l", "<i4"), ("r", "<i4"), ("t", "<f8"), ("v", "<f8")])
        nodes = np.frombuffer(blob[off:end], dtype=dt)
        est = TreeEstimator(
            nodes["f"].astype(np.int32),
            nodes["t"].astype(np.float64),
            nodes["l"].astype(np.int32),
            nodes["r"].astype(np.int32),
            nodes["v"].astype(np.float64),
            np.zeros(records, dtype=np.int32),
            min_leaf_size=0,
        )
    elif variant in ("svr", "gp"):
        a, b, c = _ROW3.unpack_from(blob, off)
        data = rows(_ROW3, records, off + _ROW3.size)
        if variant == "svr":
            kernel = KernelParams(kinds[kcode], a, b)
            est = SvrEstimator(data[:, :2].copy(), data[:, 2].copy(), c, kernel, C=np.nan, epsilon=np.nan)
        else:
            kernel = KernelParams(kinds[kcode], a, b, c)
            est = GpEstimator(data[:, :2].copy(), data[:, 2].copy(), kernel)
    else:
        (b2,) = struct.unpack_from("<d", blob, off)
        data = rows(_ROW4, records, off + 8)
        est = NnEstimator(data[:, :2].copy(), data[:, 2].copy(), data[:, 3].reshape(1, -1).copy(), np.array([b2]))
    return TrainedModel(variant, Normalizer((m0, m1), (s0, s1)), est, t_mean, t_std, mode)


def save_model(model: TrainedModel, path) -> bytes:
    blob = export_compact(model)
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return blob


def load_model(path) -> TrainedModel:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return import_compact(blob)


def to_json(model: TrainedModel) -> str:
    """Human-readable dump carrying the same numbers as the binary file."""
    est = model.estimator
    doc = {
        "format": "ftmkit-model",
        "version": VERSION,
        "variant": model.variant,
        "target_mode": model.target_mode,
        "features": ["rtt_raw_ns", "mean_rssi_dbm"],
        "feature_means": list(model.normalizer.means),
        "feature_stds": list(model.normalizer.stds),
        "target_mean": model.target_mean,
        "target_std": model.target_std,
    }
    if model.variant == "tree":
        doc["nodes"] = [
            {"feature": int(f), "threshold": float(t), "left": int(lc), "right": int(rc), "value": float(v)}
            for f, t, lc, rc, v in zip(est.feature, est.threshold, est.left, est.right, est.value)
        ]
    elif model.variant == "svr":
        doc["kernel"] = {"kind": est.kernel.kind, "sigma_f": est.kernel.sigma_f, "sigma_l": est.kernel.sigma_l}
        doc["bias"] = est.bias
        doc["support_vectors"] = est.support_vectors.tolist()
        doc["dual_coef"] = est.dual_coef.tolist()
    elif model.variant == "gp":
        k = est.kernel
        doc["kernel"] = {"kind": k.kind, "sigma_f": k.sigma_f, "sigma_l": k.sigma_l, "noise_sigma": k.noise_sigma}
        doc["inputs"] = est.X.tolist()
        doc["weights"] = est.weights.tolist()
    else:
        doc.update(W1=est.W1.tolist(), b1=est.b1.tolist(), W2=est.W2.tolist(), b2=est.b2.tolist())
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def to_c_header(model: TrainedModel, prefix: str = "ftm_model") -> str:
    """Tree models as static C arrays for microcontroller evaluation."""
    if model.variant != "tree":
        raise UnsupportedVariant("C header export is implemented for tree models only")
    est = model.estimator
    n = est.n_nodes

    def arr(ctype, name, values, fmt):
        body = ",\n    ".join(", ".join(fmt(v) for v in values[i : i + 6]) for i in range(0, len(values), 6))
        return f"static const {ctype} {prefix}_{name}[{len(values)}] = {{\n    {body}\n}};\n"

    g = lambda v: repr(float(v))  # noqa: E731
    lines = [
        f"/* generated by ftmkit; variant=tree target_mode={model.target_mode} */\n",
        f"#define {prefix.upper()}_N_NODES {n}\n",
        f"#define {prefix.upper()}_CORRECTION_MODE {_MODE_CODES[model.target_mode]}\n",
        arr("double", "feat_mean", list(model.normalizer.means), g),
        arr("double", "feat_std", list(model.normalizer.stds), g),
        f"static const double {prefix}_target_mean = {g(model.target_mean)};\n",
        f"static const double {prefix}_target_std = {g(model.target_std)};\n",
        arr("int", "feature", est.feature.tolist(), str),
        arr("int", "left", est.left.tolist(), str),
        arr("int", "right", est.right.tolist(), str),
        arr("double", "threshold", est.threshold.tolist(), g),
        arr("double", "value", est.value.tolist(), g),
    ]
    return "".join(lines)
