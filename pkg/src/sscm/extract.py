"""Per-sample channel statistics: delay spread, angle spreads, K-factor, cluster count."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelSample,
    PowerProfile,
    Side,
    power_angle_spectrum,
    power_delay_profile,
    to_angle_domain,
    to_time_domain,
)

KF_CAP_DB = 40.0


class EmptyChannelError(ValueError):
    """Raised when a channel or profile carries no power."""


@dataclass(frozen=True)
class ExtractConfig:
    pdp_threshold_db: float = 25.0
    cluster_gap_taps: int = 2

    def __post_init__(self):
        if not self.pdp_threshold_db > 0:
            raise ValueError("pdp_threshold_db must be > 0")
        if self.cluster_gap_taps < 1:
            raise ValueError("cluster_gap_taps must be >= 1")


@dataclass(frozen=True)
class ChannelStats:
    ds: float
    asd: float
    asa: float
    kf_db: float
    n_clusters: int
    kf_capped: bool = False


def wrap_deg(angles):
    """Wrap degrees into (-180, 180]."""
    a = np.asarray(angles, dtype=float)
    w = np.mod(a + 180.0, 360.0) - 180.0
    return np.where(w == -180.0, 180.0, w)


def _as_profile(profile, powers=None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(profile, PowerProfile):
        x, p = profile.abscissa, profile.power
    else:
        x, p = np.asarray(profile, dtype=float), np.asarray(powers, dtype=float)
    total = p.sum()
    if not total > 0:
        raise EmptyChannelError("profile has no positive power")
    return x, p / total


def rms_spread(profile: PowerProfile, powers=None) -> float:
    """Power-weighted standard deviation of the abscissa."""
    x, w = _as_profile(profile, powers)
    mean = np.dot(w, x)
    return math.sqrt(max(np.dot(w, x * x) - mean * mean, 0.0))


def _segment_shifts(x: np.ndarray) -> np.ndarray:
    """One rotation per segment between the wrap points ``180 - x_i`` (midpoints)."""
    b = np.sort(np.mod(180.0 - x, 360.0), axis=-1)
    nxt = np.concatenate([b[..., 1:], b[..., :1] + 360.0], axis=-1)
    return 0.5 * (b + nxt)


def _spread_at(x: np.ndarray, w: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    shifted = wrap_deg(x[..., None, :] + shifts[..., :, None])  # [..., shift, angle]
    dev = wrap_deg(shifted - (shifted @ w)[..., None])
    return np.sqrt(np.clip((dev * dev) @ w, 0.0, None))


def grid_circular_spread(angle_sets: np.ndarray, w: np.ndarray) -> np.ndarray:
    """:func:`circular_spread` of every row of ``angle_sets`` under shared weights ``w``."""
    x = np.asarray(angle_sets, dtype=float)
    return _spread_at(x, w / w.sum(), _segment_shifts(x)).min(axis=-1)


def circular_spread(profile: PowerProfile, powers=None) -> float:
    """Wrap-aware angular spread in degrees, minimized over a reference rotation.

    Accepts a :class:`PowerProfile` or ``(angles, powers)`` arrays. The wrapped
    second moment only changes when some angle crosses the +-180 cut, so it is
    piecewise constant in the rotation; one rotation per piece gives the exact
    minimum.
    """
    x, w = _as_profile(profile, powers)
    return float(_spread_at(x, w, _segment_shifts(x)).min())


def _threshold(power: np.ndarray, threshold_db: float) -> np.ndarray:
    peak = power.max()
    if not peak > 0:
        raise EmptyChannelError("channel has no power")
    return np.where(power >= peak * 10.0 ** (-threshold_db / 10.0), power, 0.0)


def thresholded_pdp(sample: ChannelSample, cfg: ExtractConfig = ExtractConfig()) -> PowerProfile:
    pdp = power_delay_profile(to_time_domain(sample))
    return PowerProfile(pdp.abscissa, _threshold(pdp.power, cfg.pdp_threshold_db))


def _delay_spread(pdp: PowerProfile) -> float:
    return rms_spread(pdp)


def _k_factor(power: np.ndarray) -> tuple[float, bool]:
    peak = power.max()
    rest = power.sum() - peak
    if not peak > 0:
        raise EmptyChannelError("channel has no power")
    if rest <= 0 or np.count_nonzero(power) < 2:
        return KF_CAP_DB, True
    return min(10.0 * math.log10(peak / rest), KF_CAP_DB), False


def _count_groups(power: np.ndarray, gap: int) -> int:
    taps = np.flatnonzero(power > 0)
    if taps.size == 0:
        raise EmptyChannelError("channel has no power")
    return 1 + int(np.count_nonzero(np.diff(taps) > gap))


def extract_delay_spread(sample: ChannelSample, cfg: ExtractConfig = ExtractConfig()) -> float:
    return _delay_spread(thresholded_pdp(sample, cfg))


def _angle_spread(sample_ang, side: Side, cfg: ExtractConfig) -> float:
    pas = power_angle_spectrum(sample_ang, side)
    return circular_spread(pas.abscissa, _threshold(pas.power, cfg.pdp_threshold_db))


def extract_angle_spread(sample: ChannelSample, side: Side, cfg: ExtractConfig = ExtractConfig()) -> float:
    return _angle_spread(to_angle_domain(sample), side, cfg)


def extract_k_factor(sample: ChannelSample, cfg: ExtractConfig = ExtractConfig()) -> float:
    """Peak-tap K-factor in dB; a lone surviving tap reports the 40 dB cap."""
    return _k_factor(thresholded_pdp(sample, cfg).power)[0]


def count_clusters(sample: ChannelSample, cfg: ExtractConfig = ExtractConfig()) -> int:
    return _count_groups(thresholded_pdp(sample, cfg).power, cfg.cluster_gap_taps)


def extract_stats(sample: ChannelSample, cfg: ExtractConfig = ExtractConfig()) -> ChannelStats:
    pdp = thresholded_pdp(sample, cfg)
    ang = to_angle_domain(sample)
    kf_db, capped = _k_factor(pdp.power)
    return ChannelStats(
        ds=_delay_spread(pdp),
        asd=_angle_spread(ang, "tx", cfg),
        asa=_angle_spread(ang, "rx", cfg),
        kf_db=kf_db,
        n_clusters=_count_groups(pdp.power, cfg.cluster_gap_taps),
        kf_capped=capped,
    )
