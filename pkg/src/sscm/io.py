"""On-disk formats: binary channel datasets, parameter files, the 8-byte statistics report."""

from __future__ import annotations

import csv
import math
import os
import struct
import warnings
from typing import Iterable, Sequence

import numpy as np

from .channel import CarrierConfig, ChannelSample
from .extract import KF_CAP_DB, ChannelStats
from .generate import LspSet


class FormatError(ValueError):
    """Malformed or inconsistent file contents."""


# -- dataset files -----------------------------------------------------------

MAGIC = b"CSDS"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sHIIIIdd")
HEADER_SIZE = _HEADER.size  # 38


def dataset_file_size(count: int, n_rx: int, n_tx: int, n_sc: int) -> int:
    return HEADER_SIZE + count * n_rx * n_tx * n_sc * 8


def dataset_bytes(samples: Sequence[ChannelSample]) -> bytes:
    if len(samples) == 0:
        raise FormatError("cannot write an empty dataset")
    first = samples[0]
    n_rx, n_tx, n_sc = first.h_f.shape
    for i, s in enumerate(samples):
        if s.h_f.shape != first.h_f.shape or s.carrier != first.carrier:
            raise FormatError(f"sample {i} has dims/carrier inconsistent with sample 0")
    header = _HEADER.pack(
        MAGIC,
        DATASET_VERSION,
        len(samples),
        n_rx,
        n_tx,
        n_sc,
        first.carrier.carrier_freq,
        first.carrier.subcarrier_spacing,
    )
    h = np.stack([s.h_f for s in samples])
    # (re, im) pairs, subcarrier fastest then tx then rx
    payload = np.empty(h.shape + (2,), dtype="<f4")
    payload[..., 0] = h.real
    payload[..., 1] = h.imag
    return header + payload.tobytes()


def write_dataset(path: str | os.PathLike, samples: Sequence[ChannelSample]) -> None:
    data = dataset_bytes(samples)
    with open(path, "wb") as f:
        f.write(data)


def parse_dataset(data: bytes) -> list[ChannelSample]:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"size mismatch: expected at least {HEADER_SIZE} header bytes, got {len(data)}")
    magic, version, count, n_rx, n_tx, n_sc, fc, scs = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    if min(n_rx, n_tx, n_sc) < 1:
        raise FormatError(f"invalid dims ({n_rx}, {n_tx}, {n_sc})")
    expected = dataset_file_size(count, n_rx, n_tx, n_sc)
    if len(data) != expected:
        raise FormatError(f"size mismatch: expected {expected} bytes, got {len(data)}")
    carrier = CarrierConfig(fc, scs)
    raw = np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE).reshape(count, n_rx, n_tx, n_sc, 2)
    h = raw[..., 0].astype(np.float64) + 1j * raw[..., 1].astype(np.float64)
    return [ChannelSample(h[i], carrier) for i in range(count)]


def read_dataset(path: str | os.PathLike) -> list[ChannelSample]:
    with open(path, "rb") as f:
        return parse_dataset(f.read())


# -- parameter files ---------------------------------------------------------

PARAM_KEYS = (
    "mu_lgDS",
    "sigma_lgDS",
    "mu_lgASD",
    "sigma_lgASD",
    "mu_lgASA",
    "sigma_lgASA",
    "mu_KF",
    "sigma_KF",
    "lambda_clusters",
    "los",
)
REQUIRED_KEYS = ("mu_lgDS", "sigma_lgDS", "mu_lgASD", "sigma_lgASD", "mu_KF", "sigma_KF")


def format_params(p: LspSet, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    for key in PARAM_KEYS[:8]:
        lines.append(f"{key}={getattr(p, key):.9g}")
    if p.lambda_clusters is not None:
        lines.append(f"lambda_clusters={p.lambda_clusters:.9g}")
    lines.append(f"los={'true' if p.los else 'false'}")
    return "\n".join(lines) + "\n"


def _parse_bool(value: str, lineno: int) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise FormatError(f"line {lineno}: los must be true/false, got {value!r}")


def parse_params(text: str) -> LspSet:
    """Parse ``key=value`` lines.

    ``mu_lgASA``/``sigma_lgASA`` default to the ASD values and
    ``lambda_clusters`` may be omitted (or ``none``); ``los`` defaults to true.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_KEYS:
            raise FormatError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise FormatError(f"line {lineno}: duplicate key {key!r}")
        if key == "los":
            values[key] = _parse_bool(value, lineno)
        elif key == "lambda_clusters" and value.lower() == "none":
            values[key] = None
        else:
            try:
                values[key] = float(value)
            except ValueError:
                raise FormatError(f"line {lineno}: {key} is not a number: {value!r}") from None
            if not math.isfinite(values[key]):
                raise FormatError(f"line {lineno}: {key} must be finite")
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise FormatError(f"missing keys: {', '.join(missing)}")
    values.setdefault("mu_lgASA", values["mu_lgASD"])
    values.setdefault("sigma_lgASA", values["sigma_lgASD"])
    try:
        return LspSet(**values)
    except ValueError as exc:
        raise FormatError(f"range violation: {exc}") from None


def write_params(path: str | os.PathLike, p: LspSet, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_params(p, comment))


def read_params(path: str | os.PathLike) -> LspSet:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        return parse_params(text)
    except FormatError as exc:
        raise FormatError(f"{os.fspath(path)}: {exc}") from None


# -- statistics CSV ----------------------------------------------------------

STATS_HEADER = ("ds_s", "asd_deg", "asa_deg", "kf_db", "n_clusters")


def write_stats_csv(path: str | os.PathLike, stats: Iterable[ChannelStats]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(STATS_HEADER)
        for s in stats:
            writer.writerow([repr(float(s.ds)), repr(float(s.asd)), repr(float(s.asa)), repr(float(s.kf_db)), s.n_clusters])


def read_stats_csv(path: str | os.PathLike) -> list[ChannelStats]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != STATS_HEADER:
            raise FormatError(f"stats CSV header must be {','.join(STATS_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(STATS_HEADER):
                raise FormatError(f"line {lineno}: expected {len(STATS_HEADER)} fields")
            try:
                ds, asd, asa, kf = (float(x) for x in row[:4])
                n = int(row[4])
            except ValueError:
                raise FormatError(f"line {lineno}: malformed number") from None
            out.append(ChannelStats(ds, asd, asa, kf, n, kf_capped=kf >= KF_CAP_DB))
    return out


# -- 8-byte statistics report ------------------------------------------------

REPORT_VERSION = 1
REPORT_FIELDS = (
    ("mu_lgDS", -9.0, -5.0),
    ("sigma_lgDS", 0.0, 1.5),
    ("mu_lgASD", -1.0, 2.5),
    ("sigma_lgASD", 0.0, 1.5),
    ("mu_KF", -10.0, 20.0),
    ("sigma_KF", 0.0, 10.0),
    ("lambda_clusters", 0.0, 50.0),
)


def quantize_field(x: float, lo: float, hi: float) -> int:
    # round half up; clamp to a byte
    q = math.floor((x - lo) / (hi - lo) * 255.0 + 0.5)
    return min(max(q, 0), 255)


def encode_report(params: LspSet) -> bytes:
    """Pack seven statistics into ``version || 7 quantized bytes``.

    A missing cluster rate encodes as 0. Out-of-range values are clamped and
    reported with a warning.
    """
    out = bytearray([REPORT_VERSION])
    for name, lo, hi in REPORT_FIELDS:
        x = getattr(params, name)
        if x is None:
            x = 0.0
        if not lo <= x <= hi:
            warnings.warn(f"{name}={x} outside report range [{lo}, {hi}]; clamped", stacklevel=2)
        out.append(quantize_field(x, lo, hi))
    return bytes(out)


def decode_report(data: bytes) -> dict[str, float]:
    if len(data) != 8:
        raise FormatError(f"report must be 8 bytes, got {len(data)}")
    if data[0] != REPORT_VERSION:
        raise FormatError(f"unsupported report version {data[0]}")
    return {name: lo + q / 255.0 * (hi - lo) for (name, lo, hi), q in zip(REPORT_FIELDS, data[1:])}


def report_to_params(fields: dict[str, float], los: bool = True) -> LspSet:
    """Fill a full parameter set from a decoded report (ASA copies ASD)."""
    return LspSet(
        mu_lgDS=fields["mu_lgDS"],
        sigma_lgDS=fields["sigma_lgDS"],
        mu_lgASD=fields["mu_lgASD"],
        sigma_lgASD=fields["sigma_lgASD"],
        mu_lgASA=fields["mu_lgASD"],
        sigma_lgASA=fields["sigma_lgASD"],
        mu_KF=fields["mu_KF"],
        sigma_KF=fields["sigma_KF"],
        lambda_clusters=fields["lambda_clusters"] or None,
        los=los,
    )
