"""Clustered stochastic channel generation from large-scale parameter statistics.

A simplified, azimuth-only version of the standard clustered procedure:
log-normal delay/angle spreads, a normal K-factor in dB, exponential cluster
delays, exponentially decaying shadowed cluster powers and a Poisson number of
clusters per sample.

Every sample is a pure function of ``(params, config, seed, index)``: its
random stream is ``numpy.random.Generator(PCG64(SeedSequence(seed,
spawn_key=(index,))))``, so samples can be produced in any order or in
parallel and still match a sequential run bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .channel import CarrierConfig, ChannelDims, ChannelSample, array_response
from .extract import circular_spread, grid_circular_spread, wrap_deg

MAX_ANGLE_SPREAD_DEG = 104.0


@dataclass(frozen=True)
class LspSet:
    """Distribution parameters of the large-scale channel statistics.

    Spreads are log10 of seconds (DS) or degrees (ASD/ASA); the K-factor is
    normal in dB; the cluster count is Poisson with mean ``lambda_clusters``.
    """

    mu_lgDS: float
    sigma_lgDS: float
    mu_lgASD: float
    sigma_lgASD: float
    mu_lgASA: float
    sigma_lgASA: float
    mu_KF: float
    sigma_KF: float
    lambda_clusters: float | None = None
    los: bool = True

    def __post_init__(self):
        validate_lsp(self)

    def replace(self, **changes) -> "LspSet":
        return replace(self, **changes)


LSP_RANGES = {
    "mu_lgDS": (-9.0, -5.0),
    "mu_lgASD": (-1.0, 2.5),
    "mu_lgASA": (-1.0, 2.5),
    "mu_KF": (-10.0, 20.0),
    "sigma_KF": (0.0, 10.0),
}


def validate_lsp(p: LspSet) -> None:
    for name in ("sigma_lgDS", "sigma_lgASD", "sigma_lgASA", "sigma_KF"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value >= 0):
            raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
    for name, (lo, hi) in LSP_RANGES.items():
        value = getattr(p, name)
        if not (lo <= value <= hi):
            raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")
    if p.lambda_clusters is not None and not (math.isfinite(p.lambda_clusters) and p.lambda_clusters > 0):
        raise ValueError(f"lambda_clusters must be > 0, got {p.lambda_clusters!r}")


@dataclass(frozen=True)
class GenConfig:
    dims: ChannelDims = ChannelDims(4, 8, 208)
    carrier: CarrierConfig = field(default_factory=CarrierConfig)
    rays_per_cluster: int = 20
    delay_scaling_r_tau: float = 2.5
    per_cluster_shadowing_std: float = 3.0
    intra_cluster_as_deg: float = 5.0
    min_clusters: int = 1

    def __post_init__(self):
        if self.rays_per_cluster < 1:
            raise ValueError("rays_per_cluster must be >= 1")
        if not self.delay_scaling_r_tau > 1:
            raise ValueError("delay_scaling_r_tau must be > 1")
        if self.min_clusters < 1:
            raise ValueError("min_clusters must be >= 1")
        if self.per_cluster_shadowing_std < 0 or self.intra_cluster_as_deg < 0:
            raise ValueError("shadowing std and intra-cluster spread must be >= 0")


@dataclass(frozen=True, eq=False)
class ClusterRealization:
    """Ground-truth multipath parameters behind one synthesized sample."""

    delays: np.ndarray
    powers: np.ndarray
    aod_deg: np.ndarray
    aoa_deg: np.ndarray
    ray_aods: np.ndarray
    ray_aoas: np.ndarray
    ray_phases: np.ndarray
    ds: float
    asd: float
    asa: float
    kf_linear: float
    los_fraction: float = 0.0


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def draw_lsp(params: LspSet, rng: np.random.Generator) -> tuple[float, float, float, float]:
    """Return ``(ds_sec, asd_deg, asa_deg, kf_linear)`` for one sample."""
    x = rng.standard_normal(4)
    ds = 10.0 ** (params.mu_lgDS + params.sigma_lgDS * x[0])
    asd = min(10.0 ** (params.mu_lgASD + params.sigma_lgASD * x[1]), MAX_ANGLE_SPREAD_DEG)
    asa = min(10.0 ** (params.mu_lgASA + params.sigma_lgASA * x[2]), MAX_ANGLE_SPREAD_DEG)
    kf_db = params.mu_KF + params.sigma_KF * x[3]
    return ds, asd, asa, 10.0 ** (kf_db / 10.0)


def draw_cluster_count(lam: float, min_clusters: int, rng: np.random.Generator) -> int:
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    return max(int(rng.poisson(lam)), int(min_clusters))


def gen_delays(n_clusters: int, ds_sec: float, r_tau: float, rng: np.random.Generator) -> np.ndarray:
    """Exponential cluster delays, sorted ascending with the first at exactly 0."""
    u = 1.0 - rng.random(n_clusters)  # (0, 1]
    tau = np.sort(-r_tau * ds_sec * np.log(u))
    return tau - tau[0]


def gen_powers(
    delays: np.ndarray,
    ds_sec: float,
    r_tau: float,
    shadow_std_db: float,
    kf_linear: float,
    los: bool,
    rng: np.random.Generator,
) -> np.ndarray:
    """Normalized cluster powers; with ``los`` the first cluster carries the specular part."""
    delays = np.asarray(delays, dtype=float)
    z = rng.normal(0.0, shadow_std_db, delays.size) if shadow_std_db > 0 else np.zeros(delays.size)
    p = np.exp(-delays * (r_tau - 1.0) / (r_tau * ds_sec)) * 10.0 ** (-z / 10.0)
    p = p / p.sum()
    if los:
        if not kf_linear > 0:
            raise ValueError("kf_linear must be > 0 for a LOS channel")
        p = p / (kf_linear + 1.0)
        p[0] += kf_linear / (kf_linear + 1.0)
    return p


def rescale_to_spread(raw: np.ndarray, powers: np.ndarray, target_deg: float) -> np.ndarray:
    """Scale zero-mean angles so that their circular spread equals ``target_deg``.

    Some power splits cannot reach a wide target at all (two clusters peak at
    ``180 * sqrt(w * (1 - w))``); those get the widest spread found instead.
    """
    raw = np.asarray(raw, dtype=float)
    w = powers / powers.sum()
    centred = raw - np.dot(w, raw)
    lin = math.sqrt(max(np.dot(w, centred**2), 0.0))
    if lin == 0.0 or target_deg == 0.0:
        return np.zeros_like(raw)
    scale = target_deg / lin
    angles = wrap_deg(scale * centred)
    if abs(circular_spread(angles, w) - target_deg) <= 1e-9 * max(target_deg, 1.0):
        return angles

    # Wrapping bends the spread-vs-scale curve. Scan scales up to one full wrap
    # of the widest pair, then solve on the first bracket that really crosses.
    def gap(s):
        return circular_spread(wrap_deg(s * centred), w) - target_deg

    top = 360.0 / np.ptp(centred)
    scales = np.linspace(0.0, top, 181)
    coarse = grid_circular_spread(wrap_deg(scales[:, None] * centred[None, :]), w)
    lo = 0.0
    for i in np.flatnonzero(coarse >= target_deg):
        if gap(scales[i]) >= 0:
            return wrap_deg(brentq(gap, lo, scales[i], xtol=1e-13, rtol=1e-13) * centred)
        lo = scales[i]

    # target beyond what these powers allow; settle for the widest spread
    best = int(np.argmax(coarse))
    step = scales[1]
    res = minimize_scalar(
        lambda s: -circular_spread(wrap_deg(s * centred), w),
        bounds=(max(scales[best] - step, 0.0), min(scales[best] + step, top)),
        method="bounded",
        options={"xatol": 1e-8 * top},
    )
    return wrap_deg(res.x * centred)


def gen_angles(
    n_clusters: int,
    as_deg: float,
    intra_as_deg: float,
    rays_per_cluster: int,
    rng: np.random.Generator,
    powers: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster centre angles and per-ray angles ``[cluster, ray]`` in degrees.

    Centre angles are Gaussian draws rescaled so that their power-weighted
    circular spread equals ``as_deg``. A single cluster carries no centre
    spread; rays add Laplacian offsets whose standard deviation is
    ``intra_as_deg``.
    """
    if not as_deg > 0:
        raise ValueError("as_deg must be > 0")
    if powers is None:
        powers = np.full(n_clusters, 1.0 / n_clusters)
    raw = rng.standard_normal(n_clusters)
    if n_clusters > 1:
        centres = rescale_to_spread(raw, np.asarray(powers, dtype=float), as_deg)
    else:
        centres = np.zeros(1)
    b = intra_as_deg / math.sqrt(2.0)
    offsets = rng.laplace(0.0, b, (n_clusters, rays_per_cluster)) if b > 0 else np.zeros(
        (n_clusters, rays_per_cluster)
    )
    return centres, wrap_deg(centres[:, None] + offsets)


def match_delay_spread(delays: np.ndarray, powers: np.ndarray, ds_sec: float) -> np.ndarray:
    """Stretch delays so the power-weighted rms spread of the clusters equals ``ds_sec``.

    Without this the LOS peak shrinks the realized spread far below the drawn
    one. Single-cluster or zero-spread sets are returned unchanged.
    """
    w = powers / powers.sum()
    mean = np.dot(w, delays)
    current = math.sqrt(max(np.dot(w, delays**2) - mean**2, 0.0))
    if current == 0.0:
        return delays
    return delays * (ds_sec / current)


def realize_clusters(params: LspSet, config: GenConfig, rng: np.random.Generator) -> ClusterRealization:
    if params.lambda_clusters is None:
        raise ValueError("lambda_clusters is required for generation")
    ds, asd, asa, kf = draw_lsp(params, rng)
    n = draw_cluster_count(params.lambda_clusters, config.min_clusters, rng)
    r_tau = config.delay_scaling_r_tau
    delays = gen_delays(n, ds, r_tau, rng)
    powers = gen_powers(delays, ds, r_tau, config.per_cluster_shadowing_std, kf, params.los, rng)
    delays = match_delay_spread(delays, powers, ds)
    m = config.rays_per_cluster
    aod, ray_aod = gen_angles(n, asd, config.intra_cluster_as_deg, m, rng, powers)
    aoa, ray_aoa = gen_angles(n, asa, config.intra_cluster_as_deg, m, rng, powers)
    phases = rng.uniform(0.0, 2.0 * np.pi, (n, m + 1))
    los_fraction = kf / (kf + 1.0) if params.los else 0.0
    return ClusterRealization(
        delays, powers, aod, aoa, ray_aod, ray_aoa, phases, ds, asd, asa, kf, los_fraction
    )


def channel_from_clusters(c: ClusterRealization, config: GenConfig) -> ChannelSample:
    n_rx, n_tx, n_sc = config.dims.shape
    n, m = c.ray_aods.shape
    a_rx = array_response(n_rx, c.ray_aoas)  # [n, m, rx]
    a_tx = array_response(n_tx, c.ray_aods)  # [n, m, tx]
    diffuse = c.powers.copy()
    diffuse[0] -= c.los_fraction
    diffuse = np.clip(diffuse, 0.0, None)
    gains = np.sqrt(diffuse / m)[:, None] * np.exp(1j * c.ray_phases[:, :m])
    # per-cluster spatial matrix [n, rx, tx]
    spatial = np.einsum("nm,nmu,nms->nus", gains, a_rx, a_tx.conj())
    if c.los_fraction > 0:
        spatial[0] += (
            math.sqrt(c.los_fraction)
            * np.exp(1j * c.ray_phases[0, m])
            * np.outer(array_response(n_rx, c.aoa_deg[0]), array_response(n_tx, c.aod_deg[0]).conj())
        )
    f_k = (np.arange(n_sc) - n_sc // 2) * config.carrier.subcarrier_spacing
    phase = np.exp(-2j * np.pi * np.outer(c.delays, f_k))  # [n, k]
    h = np.einsum("nus,nk->usk", spatial, phase)
    return ChannelSample(h, config.carrier)


def synthesize_with_truth(
    params: LspSet, config: GenConfig, seed: int, index: int
) -> tuple[ChannelSample, ClusterRealization]:
    clusters = realize_clusters(params, config, sample_rng(seed, index))
    return channel_from_clusters(clusters, config), clusters


def synthesize_channel(params: LspSet, config: GenConfig, seed: int, index: int) -> ChannelSample:
    return synthesize_with_truth(params, config, seed, index)[0]


def generate_dataset(
    params: LspSet,
    config: GenConfig,
    count: int,
    seed: int,
    start: int = 0,
    workers: int = 1,
) -> list[ChannelSample]:
    """Samples ``start .. start+count-1``; identical for any ``workers``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    indices = range(start, start + count)
    if workers <= 1:
        return [synthesize_channel(params, config, seed, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: synthesize_channel(params, config, seed, i), indices))
