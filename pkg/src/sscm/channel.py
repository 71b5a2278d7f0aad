"""Channel tensors, domain transforms and power profiles.

Arrays are uniform linear with half-wavelength spacing at both ends, azimuth
only. All transforms use unitary (1/sqrt(N)) DFT scaling so that energy is
preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

Side = Literal["tx", "rx"]


@dataclass(frozen=True)
class ChannelDims:
    n_rx: int
    n_tx: int
    n_sc: int

    def __post_init__(self):
        for name in ("n_rx", "n_tx", "n_sc"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_rx, self.n_tx, self.n_sc)


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier frequency and spacing between the stored frequency samples.

    The default spacing, 90 kHz, is every 6th subcarrier of a 15 kHz
    numerology, so 208 samples span 18.72 MHz of a 20 MHz carrier.
    """

    carrier_freq: float = 2.6e9
    subcarrier_spacing: float = 90e3

    def __post_init__(self):
        if not (self.carrier_freq > 0 and self.subcarrier_spacing > 0):
            raise ValueError("carrier_freq and subcarrier_spacing must be > 0")


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class ChannelSample:
    """Frequency-domain channel ``h_f[rx, tx, subcarrier]``."""

    h_f: np.ndarray
    carrier: CarrierConfig = CarrierConfig()

    def __post_init__(self):
        h = np.asarray(self.h_f, dtype=np.complex128)
        if h.ndim != 3:
            raise ValueError(f"h_f must be 3-D [rx, tx, subcarrier], got shape {h.shape}")
        _check_finite(h, "h_f")
        h.setflags(write=False)
        object.__setattr__(self, "h_f", h)

    @property
    def dims(self) -> ChannelDims:
        return ChannelDims(*self.h_f.shape)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.h_f) ** 2))


@dataclass(frozen=True, eq=False)
class TimeDomainChannel:
    h_t: np.ndarray
    carrier: CarrierConfig

    @property
    def dims(self) -> ChannelDims:
        return ChannelDims(*self.h_t.shape)

    @property
    def tap_spacing(self) -> float:
        return 1.0 / (self.h_t.shape[2] * self.carrier.subcarrier_spacing)


@dataclass(frozen=True, eq=False)
class AngleDomainChannel:
    h_ang: np.ndarray
    bin_angles_rx: np.ndarray
    bin_angles_tx: np.ndarray


@dataclass(frozen=True, eq=False)
class PowerProfile:
    """Power per delay tap (seconds) or angle bin (degrees)."""

    abscissa: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float)
        p = np.asarray(self.power, dtype=float)
        if x.shape != p.shape or x.ndim != 1:
            raise ValueError("abscissa and power must be 1-D of equal length")
        if np.any(p < 0):
            raise ValueError("powers must be non-negative")
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "power", p)

    @property
    def total(self) -> float:
        return float(self.power.sum())


def to_time_domain(sample: ChannelSample) -> TimeDomainChannel:
    """Unitary IDFT along the subcarrier axis."""
    if sample.h_f.shape[2] < 2:
        raise ValueError("need at least 2 subcarriers")
    h_t = np.fft.ifft(sample.h_f, axis=2, norm="ortho")
    return TimeDomainChannel(h_t, sample.carrier)


def to_frequency_domain(t: TimeDomainChannel) -> ChannelSample:
    return ChannelSample(np.fft.fft(t.h_t, axis=2, norm="ortho"), t.carrier)


def spatial_frequencies(n: int) -> np.ndarray:
    """DFT spatial frequencies (sine of angle) in fftshift order, in [-1, 1)."""
    return 2.0 * (np.arange(n) - n // 2) / n


def bin_angles(n: int) -> np.ndarray:
    """Angle in degrees of each fftshift-ordered DFT bin, folded into (-90, 90]."""
    psi = spatial_frequencies(n)
    # psi = -1 aliases onto +1 for half-wavelength spacing
    psi = np.where(psi <= -1.0, 1.0, psi)
    return np.degrees(np.arcsin(psi))


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT whose column k is the steering vector of bin k divided by sqrt(n)."""
    u = np.arange(n)[:, None]
    return np.exp(1j * np.pi * u * spatial_frequencies(n)[None, :]) / np.sqrt(n)


def steering_vector(n_elems: int, angle_deg) -> np.ndarray:
    """ULA response, element ``u`` has phase ``pi * u * sin(angle)``.

    ``angle_deg`` may be an array; the element axis is appended last.
    """
    angle = np.asarray(angle_deg, dtype=float)
    if np.any(np.abs(angle) > 90.0):
        raise ValueError(f"angle must lie in [-90, 90] degrees, got {angle_deg!r}")
    u = np.arange(n_elems)
    return np.exp(1j * np.pi * np.sin(np.radians(angle))[..., None] * u)


def array_response(n_elems: int, angle_deg) -> np.ndarray:
    """Like :func:`steering_vector` but accepts any azimuth (front/back ambiguous)."""
    angle = np.radians(np.asarray(angle_deg, dtype=float))
    u = np.arange(n_elems)
    return np.exp(1j * np.pi * np.sin(angle)[..., None] * u)


def to_angle_domain(sample: ChannelSample) -> AngleDomainChannel:
    n_rx, n_tx, _ = sample.h_f.shape
    f_rx = dft_matrix(n_rx)
    f_tx = dft_matrix(n_tx)
    h_ang = np.einsum("ur,usk,st->rtk", f_rx.conj(), sample.h_f, f_tx)
    return AngleDomainChannel(h_ang, bin_angles(n_rx), bin_angles(n_tx))


def from_angle_domain(a: AngleDomainChannel) -> np.ndarray:
    n_rx, n_tx, _ = a.h_ang.shape
    f_rx = dft_matrix(n_rx)
    f_tx = dft_matrix(n_tx)
    return np.einsum("ur,rtk,st->usk", f_rx, a.h_ang, f_tx.conj())


def power_delay_profile(t: TimeDomainChannel) -> PowerProfile:
    power = np.mean(np.abs(t.h_t) ** 2, axis=(0, 1))
    return PowerProfile(np.arange(power.size) * t.tap_spacing, power)


def power_angle_spectrum(a: AngleDomainChannel, side: Side) -> PowerProfile:
    mag2 = np.abs(a.h_ang) ** 2
    if side == "tx":
        return PowerProfile(a.bin_angles_tx, mag2.sum(axis=(0, 2)))
    if side == "rx":
        return PowerProfile(a.bin_angles_rx, mag2.sum(axis=(1, 2)))
    raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")
