"""CSI feedback targets, compression codecs and SGCS scoring.

The learned autoencoder of the original workflow is stood in for by a linear
eigen-basis codec: the basis is the dominant eigenvectors of the training
targets' covariance, coefficients are uniformly quantized. A DFT-beam codec
serves as the codebook benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .channel import ChannelSample, dft_matrix
from .generate import sample_rng


class ZeroSubbandError(ValueError):
    pass


def canonical_phase(v: np.ndarray, axis: int = -1, eps: float = 1e-12) -> np.ndarray:
    """Rotate so the first non-negligible entry along ``axis`` is real positive."""
    v = np.asarray(v, dtype=complex)
    moved = np.moveaxis(v, axis, -1)
    mag = np.abs(moved)
    first = np.argmax(mag > eps * np.max(mag, axis=-1, keepdims=True), axis=-1)
    ref = np.take_along_axis(moved, first[..., None], axis=-1)
    ref_mag = np.abs(ref)
    rot = np.where(ref_mag > 0, ref_mag / np.where(ref_mag > 0, ref, 1), 1.0)
    return np.moveaxis(moved * rot, -1, axis)


def power_iteration(r: np.ndarray, tol: float = 1e-9, max_iter: int = 500) -> tuple[np.ndarray, float]:
    """Dominant eigenvector of a Hermitian PSD matrix, starting from all ones."""
    n = r.shape[0]
    v = np.ones(n, dtype=complex) / math.sqrt(n)
    lam = float(np.real(np.vdot(v, r @ v)))
    for _ in range(max_iter):
        x = r @ v
        norm = np.linalg.norm(x)
        if norm == 0.0:
            # all-ones start orthogonal to the range; fall back to a basis vector
            x = r[:, int(np.argmax(np.real(np.diag(r))))]
            norm = np.linalg.norm(x)
            if norm == 0.0:
                break
        v = x / norm
        new = float(np.real(np.vdot(v, r @ v)))
        if abs(new - lam) <= tol * abs(new):
            lam = new
            break
        lam = new
    return v, lam


@dataclass(frozen=True, eq=False)
class CsiTarget:
    """Unit-norm, phase-canonical dominant eigenvector per subband ``[subband, n_tx]``."""

    vectors: np.ndarray
    subband_size: int


def compute_csi_targets(sample: ChannelSample, subband_size: int = 16) -> CsiTarget:
    n_rx, n_tx, n_sc = sample.h_f.shape
    if subband_size < 1 or n_sc % subband_size:
        raise ValueError(f"n_sc={n_sc} is not divisible by subband_size={subband_size}")
    h = sample.h_f.reshape(n_rx, n_tx, n_sc // subband_size, subband_size)
    # R_b = sum_k H_k^H H_k over the subband's subcarriers
    cov = np.einsum("ustk,uvtk->tsv", h.conj(), h)
    rows = []
    for b, r in enumerate(cov):
        if not np.real(np.trace(r)) > 0:
            raise ZeroSubbandError(f"subband {b} carries no power")
        v, _ = power_iteration(r)
        rows.append(v / np.linalg.norm(v))
    return CsiTarget(canonical_phase(np.array(rows)), subband_size)


def sgcs(w_true, w_hat) -> float | np.ndarray:
    """Squared generalized cosine similarity along the last axis."""
    a = np.asarray(w_true, dtype=complex)
    b = np.asarray(w_hat, dtype=complex)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("vector lengths differ")
    na = np.sum(np.abs(a) ** 2, axis=-1)
    nb = np.sum(np.abs(b) ** 2, axis=-1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ValueError("SGCS is undefined for a zero vector")
    inner = np.abs(np.sum(a.conj() * b, axis=-1)) ** 2
    out = np.clip(inner / (na * nb), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def mean_sgcs(w_true, w_hat) -> float:
    return float(np.mean(sgcs(w_true, w_hat)))


# -- quantization ------------------------------------------------------------

def quantize_uniform(x: np.ndarray, bits: int) -> np.ndarray:
    """Indices of a mid-tread grid of ``2**bits`` cells on [-1, 1), clamped."""
    levels = 1 << bits
    step = 2.0 / levels
    return np.clip(np.floor((np.asarray(x) + 1.0) / step + 0.5), 0, levels - 1).astype(np.int64)


def dequantize_uniform(q: np.ndarray, bits: int) -> np.ndarray:
    return -1.0 + np.asarray(q, dtype=float) * (2.0 / (1 << bits))


def pack_bits(indices: Sequence[int], widths: Sequence[int]) -> str:
    for i, w in zip(indices, widths):
        if not 0 <= int(i) < (1 << w):
            raise ValueError(f"value {i} does not fit in {w} bits")
    return "".join(format(int(i), f"0{w}b") if w else "" for i, w in zip(indices, widths))


def unpack_bits(bits: str, widths: Sequence[int]) -> list[int]:
    if len(bits) != sum(widths):
        raise ValueError(f"expected {sum(widths)} bits, got {len(bits)}")
    out, pos = [], 0
    for w in widths:
        out.append(int(bits[pos : pos + w], 2) if w else 0)
        pos += w
    return out


class Codec(Protocol):
    feedback_bits: int

    def encode(self, w: np.ndarray) -> str: ...

    def decode(self, bits: str) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class CodecModel:
    """Linear basis ``[n_tx, n_coeff]`` with per-component uniform quantization."""

    basis: np.ndarray
    bits_per_component: int
    name: str = "linear"

    @property
    def n_coeff(self) -> int:
        return self.basis.shape[1]

    @property
    def feedback_bits(self) -> int:
        return 2 * self.n_coeff * self.bits_per_component

    def coefficients(self, w: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ np.asarray(w, dtype=complex)

    def reconstruct(self, c: np.ndarray) -> np.ndarray:
        w = self.basis @ c
        norm = np.linalg.norm(w)
        return w / norm if norm > 0 else w

    def roundtrip(self, w: np.ndarray, quantize: bool = True) -> np.ndarray:
        if not quantize:
            return self.reconstruct(self.coefficients(w))
        return self.decode(self.encode(w))

    def encode(self, w: np.ndarray) -> str:
        c = self.coefficients(w)
        comps = np.column_stack([c.real, c.imag]).ravel()
        q = quantize_uniform(comps, self.bits_per_component)
        return pack_bits(q, [self.bits_per_component] * q.size)

    def decode(self, bits: str) -> np.ndarray:
        if len(bits) != self.feedback_bits:
            raise ValueError(f"expected {self.feedback_bits} bits, got {len(bits)}")
        q = unpack_bits(bits, [self.bits_per_component] * (2 * self.n_coeff))
        comps = dequantize_uniform(q, self.bits_per_component).reshape(-1, 2)
        c = comps[:, 0] + 1j * comps[:, 1]
        if not np.any(c):
            # everything quantized to zero: fall back to the leading basis vector
            c[0] = 1.0
        return self.reconstruct(c)


def stack_targets(targets: Sequence[CsiTarget] | np.ndarray) -> np.ndarray:
    if isinstance(targets, np.ndarray):
        return targets.reshape(-1, targets.shape[-1])
    return np.concatenate([t.vectors for t in targets], axis=0)


def train_linear_codec(
    train_targets: Sequence[CsiTarget] | np.ndarray, n_coeff: int, bits_per_component: int
) -> CodecModel:
    """Top-``n_coeff`` eigenvectors of the covariance of all training rows."""
    x = stack_targets(train_targets)
    n_tx = x.shape[1]
    if x.shape[0] < n_tx:
        raise ValueError(f"need at least {n_tx} training vectors, got {x.shape[0]}")
    if not 1 <= n_coeff <= n_tx:
        raise ValueError(f"n_coeff must lie in [1, {n_tx}]")
    if bits_per_component < 1:
        raise ValueError("bits_per_component must be >= 1")
    cov = x.T @ x.conj()  # sum of w w^H
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")[:n_coeff]
    basis = canonical_phase(evecs[:, order], axis=0)
    return CodecModel(basis, bits_per_component)


@dataclass(frozen=True)
class DftCodebook:
    """Pick the strongest DFT beams and report index, amplitude and phase per beam."""

    n_tx: int
    n_beams: int
    amp_bits: int = 3
    phase_bits: int = 3
    name: str = field(default="dft")

    def __post_init__(self):
        if not 1 <= self.n_beams <= self.n_tx:
            raise ValueError(f"n_beams must lie in [1, {self.n_tx}]")
        if self.amp_bits < 0 or self.phase_bits < 0:
            raise ValueError("bit widths must be >= 0")

    @property
    def index_bits(self) -> int:
        return math.ceil(math.log2(self.n_tx)) if self.n_tx > 1 else 0

    @property
    def feedback_bits(self) -> int:
        return self.n_beams * (self.index_bits + self.amp_bits + self.phase_bits)

    def _widths(self) -> list[int]:
        return [self.index_bits, self.amp_bits, self.phase_bits] * self.n_beams

    def encode(self, w: np.ndarray) -> str:
        f = dft_matrix(self.n_tx)
        c = f.conj().T @ np.asarray(w, dtype=complex)
        beams = np.argsort(-np.abs(c), kind="stable")[: self.n_beams]
        amp = np.abs(c[beams])
        amp = amp / amp.max() if amp.max() > 0 else amp
        fields = []
        for b, a, ph in zip(beams, amp, np.angle(c[beams])):
            qa = int(round(a * ((1 << self.amp_bits) - 1))) if self.amp_bits else 0
            qp = int(round(ph / (2 * np.pi) * (1 << self.phase_bits))) % (1 << self.phase_bits) if self.phase_bits else 0
            fields += [int(b), qa, qp]
        return pack_bits(fields, self._widths())

    def decode(self, bits: str) -> np.ndarray:
        if len(bits) != self.feedback_bits:
            raise ValueError(f"expected {self.feedback_bits} bits, got {len(bits)}")
        f = dft_matrix(self.n_tx)
        fields = unpack_bits(bits, self._widths())
        w = np.zeros(self.n_tx, dtype=complex)
        for b, qa, qp in zip(fields[0::3], fields[1::3], fields[2::3]):
            a = qa / ((1 << self.amp_bits) - 1) if self.amp_bits else 1.0
            ph = 2 * np.pi * qp / (1 << self.phase_bits) if self.phase_bits else 0.0
            w += a * np.exp(1j * ph) * f[:, b % self.n_tx]
        norm = np.linalg.norm(w)
        if norm == 0:
            w = f[:, fields[0] % self.n_tx]
            norm = 1.0
        return w / norm


def noise_inject(samples: Sequence[ChannelSample], snr_db: float, seed: int) -> list[ChannelSample]:
    """Add circular Gaussian noise at ``snr_db`` relative to each sample's own energy."""
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    out = []
    for i, s in enumerate(samples):
        rng = sample_rng(seed, i)
        var = s.energy / s.h_f.size / 10.0 ** (snr_db / 10.0)
        noise = rng.standard_normal(s.h_f.shape + (2,)) @ np.array([1.0, 1j]) * math.sqrt(var / 2.0)
        out.append(ChannelSample(s.h_f + noise, s.carrier))
    return out


@dataclass(frozen=True, eq=False)
class EvalReport:
    mean_sgcs: float
    per_sample_sgcs: np.ndarray
    feedback_bits: int
    train_dataset_id: str = ""
    test_dataset_id: str = ""
    codec: str = "linear"

    def to_text(self) -> str:
        return (
            f"mean_sgcs={self.mean_sgcs:.9f}\n"
            f"n_samples={len(self.per_sample_sgcs)}\n"
            f"feedback_bits={self.feedback_bits}\n"
            f"codec={self.codec}\n"
            f"train_dataset_id={self.train_dataset_id}\n"
            f"test_dataset_id={self.test_dataset_id}\n"
        )

    def per_sample_csv(self) -> str:
        lines = ["index,sgcs"] + [f"{i},{v:.9f}" for i, v in enumerate(self.per_sample_sgcs)]
        return "\n".join(lines) + "\n"


def evaluate(
    codec: Codec,
    test_dataset: Sequence[ChannelSample] | Sequence[CsiTarget],
    subband_size: int = 16,
    train_id: str = "",
    test_id: str = "",
) -> EvalReport:
    """Mean SGCS of ``decode(encode(w))`` over every subband of every test sample."""
    if len(test_dataset) == 0:
        raise ValueError("empty test set")
    per_sample = []
    for item in test_dataset:
        target = item if isinstance(item, CsiTarget) else compute_csi_targets(item, subband_size)
        w_hat = np.array([codec.decode(codec.encode(w)) for w in target.vectors])
        per_sample.append(float(np.mean(sgcs(target.vectors, w_hat))))
    per_sample = np.array(per_sample)
    return EvalReport(
        float(per_sample.mean()),
        per_sample,
        codec.feedback_bits,
        train_id,
        test_id,
        getattr(codec, "name", type(codec).__name__),
    )
