"""Fit large-scale parameter distributions, update a baseline set and match sub-scenarios."""

from __future__ import annotations

import itertools
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .extract import KF_CAP_DB, ChannelStats
from .generate import LspSet
from .io import FormatError, parse_params, read_params, write_params

MIN_RECORDS = 30

# Matching dimensions with their default normalization spans.
MATCH_DIMS = (
    "mu_lgDS",
    "sigma_lgDS",
    "mu_lgASD",
    "sigma_lgASD",
    "mu_KF",
    "sigma_KF",
    "lambda_clusters",
)
DEFAULT_SCALES = {
    "mu_lgDS": 4.0,
    "sigma_lgDS": 1.5,
    "mu_lgASD": 3.5,
    "sigma_lgASD": 1.5,
    "mu_KF": 30.0,
    "sigma_KF": 10.0,
    "lambda_clusters": 20.0,
}
DEFAULT_WEIGHTS = {name: 1.0 for name in MATCH_DIMS}

BASELINE_NAMES = ("uma-los", "uma-nlos", "umi-los", "umi-nlos", "inh-los", "inh-nlos")


def load_baseline(name: str) -> LspSet:
    """Representative standard-model constants shipped as parameter files."""
    if name not in BASELINE_NAMES:
        raise KeyError(f"unknown baseline {name!r}; choose from {', '.join(BASELINE_NAMES)}")
    text = resources.files("sscm").joinpath("baselines", f"{name}.params").read_text(encoding="utf-8")
    return parse_params(text)


def baseline_table() -> dict[str, LspSet]:
    return {name: load_baseline(name) for name in BASELINE_NAMES}


def fit_lognormal(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 values")
    if np.any(~(v > 0)):
        raise ValueError("log-normal fit requires strictly positive values")
    lg = np.log10(v)
    return float(lg.mean()), float(lg.std(ddof=1))


def fit_normal_db(values_db, cap_db: float | None = None) -> tuple[float, float]:
    """Sample mean/std of dB values; entries at or above ``cap_db`` are dropped with a warning."""
    v = np.asarray(values_db, dtype=float)
    usable = np.isfinite(v)
    if cap_db is not None:
        usable &= v < cap_db
    dropped = int(v.size - usable.sum())
    if dropped:
        warnings.warn(f"{dropped} capped or non-finite K-factor values excluded", stacklevel=2)
    v = v[usable]
    if v.size < 2:
        raise ValueError("need at least 2 usable values")
    return float(v.mean()), float(v.std(ddof=1))


def fit_poisson(counts) -> float:
    c = np.asarray(counts, dtype=float)
    if c.size == 0:
        raise ValueError("no counts to fit")
    if np.any(c < 0):
        raise ValueError("counts must be >= 0")
    lam = float(c.mean())
    if lam == 0.0:
        warnings.warn("fitted cluster rate is 0; generation will clamp to min_clusters", stacklevel=2)
    return lam


def _positive(values, what: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if not keep.all():
        warnings.warn(f"{int((~keep).sum())} non-positive {what} values excluded", stacklevel=3)
    return v[keep]


def build_sscm(
    stats: Sequence[ChannelStats],
    baseline: LspSet,
    min_records: int = MIN_RECORDS,
) -> LspSet:
    """Replace the baseline's distribution parameters with ones fitted to ``stats``.

    The LOS flag is kept from the baseline. Zero spreads (everything in one
    tap or bin) cannot enter a log-normal fit and are skipped with a warning.
    """
    if len(stats) == 0:
        raise ValueError("empty statistics batch")
    if len(stats) < min_records:
        warnings.warn(
            f"only {len(stats)} records (< {min_records}); fitted parameters are loosely constrained",
            stacklevel=2,
        )
    mu_ds, sd_ds = fit_lognormal(_positive([s.ds for s in stats], "delay spread"))
    mu_asd, sd_asd = fit_lognormal(_positive([s.asd for s in stats], "ASD"))
    mu_asa, sd_asa = fit_lognormal(_positive([s.asa for s in stats], "ASA"))
    if baseline.los:
        mu_kf, sd_kf = fit_normal_db([s.kf_db for s in stats], cap_db=KF_CAP_DB)
    else:
        mu_kf, sd_kf = baseline.mu_KF, baseline.sigma_KF
    lam = fit_poisson([s.n_clusters for s in stats])
    return baseline.replace(
        mu_lgDS=mu_ds,
        sigma_lgDS=sd_ds,
        mu_lgASD=mu_asd,
        sigma_lgASD=sd_asd,
        mu_lgASA=mu_asa,
        sigma_lgASA=sd_asa,
        mu_KF=float(np.clip(mu_kf, -10.0, 20.0)),
        sigma_KF=float(np.clip(sd_kf, 0.0, 10.0)),
        lambda_clusters=lam if lam > 0 else baseline.lambda_clusters,
    )


@dataclass(frozen=True)
class SubScenario:
    id: str
    params: LspSet
    grid_index: tuple[int, int, int] | None = None


@dataclass(frozen=True)
class SubScenarioCatalog:
    entries: tuple[SubScenario, ...]
    m: int = 0
    n: int = 0
    q: int = 0
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    scales: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_SCALES))

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("sub-scenario ids must be unique")
        for name in MATCH_DIMS:
            if not (self.weights.get(name, 0) > 0 and self.scales.get(name, 0) > 0):
                raise ValueError(f"weight and scale for {name} must be > 0")
        if self.m and len(self.entries) != self.m * self.n * self.q:
            raise ValueError("grid-built catalog must hold m*n*q entries")

    def __len__(self) -> int:
        return len(self.entries)

    def with_spread_scales(self) -> "SubScenarioCatalog":
        """Copy whose scales are each dimension's range across the catalog (falls back to defaults)."""
        scales = dict(self.scales)
        for name in MATCH_DIMS:
            vals = [getattr(e.params, name) for e in self.entries if getattr(e.params, name) is not None]
            span = max(vals) - min(vals) if vals else 0.0
            if span > 0:
                scales[name] = span
        return SubScenarioCatalog(self.entries, self.m, self.n, self.q, dict(self.weights), scales)


def build_catalog(
    kf_grid: Sequence[float],
    as_grid: Sequence[float],
    cluster_grid: Sequence[float],
    baseline: LspSet,
    prefix: str = "uma",
) -> SubScenarioCatalog:
    """Cartesian product of K-factor means (dB), log10 ASD means and cluster rates."""
    if not (len(kf_grid) and len(as_grid) and len(cluster_grid)):
        raise ValueError("every grid must be non-empty")
    entries = []
    for (i, kf), (j, lg_as), (k, lam) in itertools.product(
        enumerate(kf_grid), enumerate(as_grid), enumerate(cluster_grid)
    ):
        params = baseline.replace(mu_KF=float(kf), mu_lgASD=float(lg_as), lambda_clusters=float(lam))
        entries.append(SubScenario(f"{prefix}-kf{i}-as{j}-nc{k}", params, (i, j, k)))
    return SubScenarioCatalog(tuple(entries), len(kf_grid), len(as_grid), len(cluster_grid))


def match_distance(
    a: LspSet,
    b: LspSet,
    weights: Mapping[str, float] = DEFAULT_WEIGHTS,
    scales: Mapping[str, float] = DEFAULT_SCALES,
) -> float:
    d = 0.0
    for name in MATCH_DIMS:
        va, vb = getattr(a, name), getattr(b, name)
        if va is None or vb is None:
            continue
        d += weights[name] * ((va - vb) / scales[name]) ** 2
    return d


def catalog_match(
    catalog: SubScenarioCatalog, query: LspSet, top_k: int = 1
) -> list[tuple[SubScenario, float]]:
    if len(catalog) == 0:
        raise ValueError("empty catalog")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    scored = [(e, match_distance(e.params, query, catalog.weights, catalog.scales)) for e in catalog.entries]
    scored.sort(key=lambda pair: (pair[1], pair[0].id))
    return scored[:top_k]


# -- catalog persistence -----------------------------------------------------

CATALOG_META = "catalog.meta"


def save_catalog(catalog: SubScenarioCatalog, directory: str | os.PathLike) -> None:
    """One ``<id>.params`` file per entry plus ``catalog.meta`` (grid sizes, weights, scales)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for e in catalog.entries:
        comment = None if e.grid_index is None else "grid_index=%d,%d,%d" % e.grid_index
        write_params(d / f"{e.id}.params", e.params, comment)
    lines = [f"m={catalog.m}", f"n={catalog.n}", f"q={catalog.q}"]
    lines += [f"weight.{k}={catalog.weights[k]!r}" for k in MATCH_DIMS]
    lines += [f"scale.{k}={catalog.scales[k]!r}" for k in MATCH_DIMS]
    (d / CATALOG_META).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_catalog(directory: str | os.PathLike) -> SubScenarioCatalog:
    d = Path(directory)
    if not d.is_dir():
        raise FormatError(f"catalog directory {os.fspath(d)!r} not found")
    entries = []
    for path in sorted(d.glob("*.params")):
        params = read_params(path)
        grid = None
        first = path.read_text(encoding="utf-8").splitlines()[:1]
        if first and first[0].startswith("# grid_index="):
            grid = tuple(int(x) for x in first[0].split("=", 1)[1].split(","))
        entries.append(SubScenario(path.stem, params, grid))
    if not entries:
        raise FormatError(f"catalog directory {os.fspath(d)!r} holds no .params files")
    grid = {"m": 0, "n": 0, "q": 0}
    weights, scales = dict(DEFAULT_WEIGHTS), dict(DEFAULT_SCALES)
    meta = d / CATALOG_META
    if meta.exists():
        for lineno, line in enumerate(meta.read_text(encoding="utf-8").splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            try:
                if key in grid:
                    grid[key] = int(value)
                elif key.startswith("weight.") and key[7:] in MATCH_DIMS:
                    weights[key[7:]] = float(value)
                elif key.startswith("scale.") and key[6:] in MATCH_DIMS:
                    scales[key[6:]] = float(value)
                else:
                    raise FormatError(f"{CATALOG_META} line {lineno}: unknown key {key!r}")
            except ValueError as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"{CATALOG_META} line {lineno}: bad value {value!r}") from None
    m, n, q = grid["m"], grid["n"], grid["q"]
    if m * n * q != len(entries):
        m = n = q = 0
    return SubScenarioCatalog(tuple(entries), m, n, q, weights, scales)

