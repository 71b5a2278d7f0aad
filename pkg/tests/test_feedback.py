import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sscm.channel import ChannelSample, dft_matrix
from sscm.feedback import (
    CodecModel,
    CsiTarget,
    DftCodebook,
    ZeroSubbandError,
    canonical_phase,
    compute_csi_targets,
    dequantize_uniform,
    evaluate,
    mean_sgcs,
    noise_inject,
    pack_bits,
    power_iteration,
    quantize_uniform,
    sgcs,
    train_linear_codec,
    unpack_bits,
)
from sscm.generate import GenConfig, generate_dataset

from .conftest import REFERENCE_SETS


def random_unit(rng, n, count=None):
    shape = (n,) if count is None else (count, n)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture(scope="module")
def set_b_targets():
    train = generate_dataset(REFERENCE_SETS["B"], GenConfig(), 300, 101)
    test = generate_dataset(REFERENCE_SETS["B"], GenConfig(), 150, 102)
    return [compute_csi_targets(s) for s in train], [compute_csi_targets(s) for s in test]


class TestPowerIteration:
    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            a = rng.standard_normal((n, n + 2)) + 1j * rng.standard_normal((n, n + 2))
            r = a @ a.conj().T
            v, lam = power_iteration(r, tol=1e-14, max_iter=5000)
            evals, evecs = np.linalg.eigh(r)
            if evals[-1] - evals[-2] < 1e-3 * evals[-1]:
                continue  # near-degenerate top eigenvalue, direction undefined
            assert abs(np.vdot(evecs[:, -1], v)) ** 2 >= 1 - 1e-8
            assert lam == pytest.approx(evals[-1], rel=1e-9)

    def test_start_orthogonal_to_range(self):
        u = np.array([1.0, -1.0]) / math.sqrt(2)
        v, lam = power_iteration(np.outer(u, u))
        assert abs(np.vdot(u, v)) == pytest.approx(1.0)
        assert lam == pytest.approx(1.0)


class TestTargets:
    def test_rank_one_channel(self):
        rng = np.random.default_rng(1)
        f = random_unit(rng, 8)
        e = random_unit(rng, 4)
        g = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        h = np.einsum("k,u,s->usk", g, e, f.conj())
        t = compute_csi_targets(ChannelSample(h), 16)
        for row in t.vectors:
            assert abs(np.vdot(f, row)) ** 2 >= 1 - 1e-9

    def test_shape_and_canonical(self):
        s = generate_dataset(REFERENCE_SETS["B"], GenConfig(), 1, 0)[0]
        t = compute_csi_targets(s, 16)
        assert t.vectors.shape == (13, 8)
        assert np.allclose(np.linalg.norm(t.vectors, axis=1), 1.0, atol=1e-9)
        first = t.vectors[:, 0]
        assert np.allclose(first.imag, 0.0) and np.all(first.real > 0)

    def test_zero_subband(self):
        h = np.ones((2, 4, 32), complex)
        h[:, :, 16:] = 0
        with pytest.raises(ZeroSubbandError, match="subband 1"):
            compute_csi_targets(ChannelSample(h), 16)

    def test_indivisible(self):
        with pytest.raises(ValueError):
            compute_csi_targets(ChannelSample(np.ones((1, 2, 20))), 16)

    def test_canonical_phase_leading_zero(self):
        v = canonical_phase(np.array([0.0, 1j, 1.0]))
        assert v[1] == pytest.approx(1.0)


class TestSgcs:
    def test_identical(self):
        w = random_unit(np.random.default_rng(2), 8)
        assert sgcs(w, w) == pytest.approx(1.0, abs=1e-12)

    def test_half(self):
        assert sgcs(np.array([1.0, 0.0]), np.array([1, 1]) / math.sqrt(2)) == pytest.approx(0.5, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(1e-3, 1e3))
    def test_range_and_invariances(self, seed, theta, c):
        rng = np.random.default_rng(seed)
        w, v = random_unit(rng, 8), random_unit(rng, 8)
        s = sgcs(w, v)
        assert 0.0 <= s <= 1.0
        assert sgcs(w, c * np.exp(1j * theta) * w) == pytest.approx(1.0, abs=1e-12)
        assert sgcs(c * np.exp(1j * theta) * w, v) == pytest.approx(s, abs=1e-12)

    def test_mean_of_rows(self):
        rng = np.random.default_rng(3)
        a, b = random_unit(rng, 4, 10), random_unit(rng, 4, 10)
        assert mean_sgcs(a, b) == pytest.approx(np.mean([sgcs(x, y) for x, y in zip(a, b)]))


class TestQuantizer:
    @pytest.mark.parametrize("bits", [1, 2, 4, 8])
    def test_zero_representable_and_bounded(self, bits):
        x = np.linspace(-1.5, 1.5, 301)
        q = quantize_uniform(x, bits)
        assert q.min() >= 0 and q.max() < 2**bits
        assert dequantize_uniform(quantize_uniform(np.zeros(1), bits), bits)[0] == 0.0
        inside = np.abs(x) <= 1 - 2.0 / 2**bits
        assert np.all(np.abs(dequantize_uniform(q, bits) - x)[inside] <= 1.0 / 2**bits + 1e-12)

    def test_bit_packing(self):
        bits = pack_bits([5, 0, 3], [3, 2, 2])
        assert bits == "1010011"
        assert unpack_bits(bits, [3, 2, 2]) == [5, 0, 3]
        with pytest.raises(ValueError):
            unpack_bits(bits, [3, 3])
        with pytest.raises(ValueError):
            pack_bits([4], [2])


class TestLinearCodec:
    def test_full_basis_lossless(self):
        rng = np.random.default_rng(4)
        codec = train_linear_codec(random_unit(rng, 8, 50), 8, 4)
        assert np.allclose(codec.basis.conj().T @ codec.basis, np.eye(8), atol=1e-9)
        for w in random_unit(rng, 8, 20):
            assert sgcs(w, codec.roundtrip(w, quantize=False)) == pytest.approx(1.0, abs=1e-9)

    def test_two_dim_training_set(self):
        rng = np.random.default_rng(5)
        span = random_unit(rng, 8, 2)
        rows = (rng.standard_normal((40, 2)) + 1j * rng.standard_normal((40, 2))) @ span
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        codec = train_linear_codec(rows, 2, 4)
        for w in rows:
            assert sgcs(w, codec.roundtrip(w, quantize=False)) == pytest.approx(1.0, abs=1e-9)

    def test_sixteen_bit_near_lossless(self):
        rng = np.random.default_rng(6)
        codec = train_linear_codec(random_unit(rng, 8, 50), 8, 16)
        scores = [sgcs(w, codec.roundtrip(w)) for w in random_unit(rng, 8, 50)]
        assert min(scores) >= 0.9999

    def test_fifty_six_bits(self):
        rng = np.random.default_rng(7)
        codec = train_linear_codec(random_unit(rng, 8, 50), 7, 4)
        assert codec.feedback_bits == 56
        assert len(codec.encode(random_unit(rng, 8))) == 56

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_encode_length_identity(self, n, b, seed):
        rng = np.random.default_rng(seed)
        codec = train_linear_codec(random_unit(rng, 8, 20), n, b)
        bits = codec.encode(random_unit(rng, 8))
        assert len(bits) == 2 * n * b == codec.feedback_bits
        assert set(bits) <= {"0", "1"}
        assert np.linalg.norm(codec.decode(bits)) == pytest.approx(1.0)

    def test_decode_wrong_length(self):
        codec = train_linear_codec(random_unit(np.random.default_rng(8), 8, 20), 2, 2)
        with pytest.raises(ValueError):
            codec.decode("0101")

    def test_training_errors(self):
        rows = random_unit(np.random.default_rng(9), 8, 20)
        for args in ((rows[:4], 2, 2), (rows, 0, 2), (rows, 9, 2), (rows, 2, 0)):
            with pytest.raises(ValueError):
                train_linear_codec(*args)

    def test_identity_evaluation(self):
        rng = np.random.default_rng(10)
        codec = train_linear_codec(random_unit(rng, 8, 50), 8, 4)

        class Lossless:
            feedback_bits = 0

            def encode(self, w):
                return w

            def decode(self, w):
                return codec.roundtrip(w, quantize=False)

        targets = [CsiTarget(random_unit(rng, 8, 13), 16) for _ in range(5)]
        report = evaluate(Lossless(), targets)
        assert report.mean_sgcs == pytest.approx(1.0, abs=1e-9)
        assert report.mean_sgcs == pytest.approx(np.mean(report.per_sample_sgcs))

    def test_fewer_bits_never_better(self, set_b_targets):
        train, test = set_b_targets
        scores = [evaluate(train_linear_codec(train, 7, b), test).mean_sgcs for b in (1, 2, 3, 4, 6)]
        assert all(lo <= hi + 0.005 for lo, hi in zip(scores, scores[1:]))


class TestDftCodebook:
    def test_bit_count(self):
        cb = DftCodebook(8, 2, 3, 3)
        assert cb.feedback_bits == 18
        assert len(cb.encode(random_unit(np.random.default_rng(0), 8))) == 18

    @pytest.mark.parametrize("col", range(8))
    def test_dft_column_exact(self, col):
        w = dft_matrix(8)[:, col]
        cb = DftCodebook(8, 1)
        assert sgcs(w, cb.decode(cb.encode(w))) == pytest.approx(1.0, abs=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            DftCodebook(8, 0)
        with pytest.raises(ValueError):
            DftCodebook(8, 9)

    def test_more_beams_not_worse(self, set_b_targets):
        _, test = set_b_targets
        scores = [evaluate(DftCodebook(8, n), test).mean_sgcs for n in (1, 2, 3, 4)]
        assert scores == sorted(scores)


class TestNoiseInjection:
    def test_empirical_snr(self):
        samples = generate_dataset(REFERENCE_SETS["B"], GenConfig(), 20, 11)
        noisy = noise_inject(samples, 10.0, seed=3)
        signal = sum(s.energy for s in samples)
        noise = sum(np.sum(np.abs(n.h_f - s.h_f) ** 2) for s, n in zip(samples, noisy))
        assert abs(10 * math.log10(signal / noise) - 10.0) <= 0.5

    def test_huge_snr_is_identity(self):
        s = generate_dataset(REFERENCE_SETS["B"], GenConfig(), 2, 11)
        for a, b in zip(s, noise_inject(s, 300.0, seed=3)):
            assert np.linalg.norm(b.h_f - a.h_f) <= 1e-9 * np.linalg.norm(a.h_f)

    def test_deterministic(self):
        s = generate_dataset(REFERENCE_SETS["B"], GenConfig(), 2, 11)
        a, b = noise_inject(s, 5.0, 1), noise_inject(s, 5.0, 1)
        assert all(x.h_f.tobytes() == y.h_f.tobytes() for x, y in zip(a, b))

    def test_rejects_infinite(self):
        with pytest.raises(ValueError):
            noise_inject([], math.inf, 0)


class TestReport:
    def test_text_and_csv(self):
        rng = np.random.default_rng(12)
        codec = train_linear_codec(random_unit(rng, 8, 30), 7, 4)
        targets = [CsiTarget(random_unit(rng, 8, 13), 16) for _ in range(3)]
        r = evaluate(codec, targets, train_id="b", test_id="d")
        text = dict(line.split("=", 1) for line in r.to_text().splitlines())
        assert text["feedback_bits"] == "56" and text["n_samples"] == "3"
        assert text["train_dataset_id"] == "b" and text["codec"] == "linear"
        assert r.per_sample_csv().splitlines()[0] == "index,sgcs"

    def test_empty(self):
        with pytest.raises(ValueError):
            evaluate(DftCodebook(8, 1), [])
