import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import RATE, synth_vowel
from lipsync import kernels
from lipsync.audio import AudioClip, PcmRingBuffer
from lipsync.errors import ConfigMismatch
from lipsync.mfcc import (
    MfccConfig,
    StreamingMfcc,
    build_mel_filterbank,
    compute_mfcc,
    dct_ii,
    hamming_window,
    hz_to_mel,
    mel_filter_centers,
    mel_to_hz,
    power_spectrum,
    pre_emphasis_filter,
)

# ---------------------------------------------------------------------------
# Oracles. Deliberately naive re-derivations (O(N^2) loops, scalar math)
# so they share no code path with the package implementations they check.


def dft_power_oracle(frame, fft_size):
    """Brute-force DFT power spectrum: the slow definition of what the
    radix-2 kernel is supposed to compute."""
    x = np.zeros(fft_size)
    x[: len(frame)] = frame
    n = np.arange(fft_size)
    out = np.empty(fft_size // 2 + 1)
    for k in range(fft_size // 2 + 1):
        spec = np.sum(x * np.exp(-2j * np.pi * k * n / fft_size))
        out[k] = (spec.real**2 + spec.imag**2) / fft_size
    return out


def dct_oracle(v, num_coeffs):
    m = len(v)
    return np.array(
        [
            sum(v[i] * math.cos(math.pi * k * (i + 0.5) / m) for i in range(m))
            for k in range(num_coeffs)
        ]
    )


def mel_grid_oracle(config):
    """(mel points, snapped bin indices) recomputed with scalar math."""
    lo = 2595.0 * math.log10(1.0 + config.mel_low / 700.0)
    hi = 2595.0 * math.log10(1.0 + config.mel_high / 700.0)
    pts = [
        lo + (hi - lo) * i / (config.num_mel_filters + 1)
        for i in range(config.num_mel_filters + 2)
    ]
    bins = [
        min(
            math.floor((config.fft_size + 1) * 700.0 * (10.0 ** (p / 2595.0) - 1.0) / config.sample_rate),
            config.fft_size // 2,
        )
        for p in pts
    ]
    return pts, bins


# ---------------------------------------------------------------------------
# Pre-emphasis


def test_pre_emphasis_step_input():
    y = pre_emphasis_filter(np.ones(6), 0.97)
    expected = np.full(6, 1.0 - 0.97)
    expected[0] = 1.0
    np.testing.assert_array_equal(y, expected)


def test_pre_emphasis_alpha_zero_is_identity():
    x = np.array([0.3, -0.2, 0.9, 0.0])
    y = pre_emphasis_filter(x, 0.0)
    np.testing.assert_array_equal(y, x)
    assert y is not x  # fresh array, input untouched


def test_pre_emphasis_alternating_signal():
    x = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    y = pre_emphasis_filter(x, 0.97)
    np.testing.assert_array_equal(y, [1.0, -1.97, 1.97, -1.97, 1.97])


@pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
def test_pre_emphasis_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        pre_emphasis_filter(np.ones(4), alpha)


# ---------------------------------------------------------------------------
# Hamming window


def test_hamming_three_points():
    w = hamming_window(np.ones(3))
    np.testing.assert_allclose(w, [0.08, 1.0, 0.08], atol=1e-15)


def test_hamming_preserves_zero_frame():
    np.testing.assert_array_equal(hamming_window(np.zeros(64)), np.zeros(64))


def test_hamming_rejects_empty():
    with pytest.raises(ValueError):
        hamming_window(np.zeros(0))


@given(st.integers(min_value=2, max_value=300))
def test_hamming_symmetric_and_bounded(n):
    w = hamming_window(np.ones(n))
    np.testing.assert_allclose(w, w[::-1], atol=0)
    assert w.min() >= 0.08 - 1e-12
    assert w.max() <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# Power spectrum / FFT kernel


def test_power_spectrum_pure_cosine_bin():
    n = 1024
    k0 = 37
    x = np.cos(2 * np.pi * k0 * np.arange(n) / n)
    p = power_spectrum(x, n)
    assert p[k0] == pytest.approx(n / 4, rel=1e-9)
    off = np.delete(p, [k0 - 1, k0, k0 + 1])
    assert np.abs(off).max() < 1e-9


def test_power_spectrum_zero_frame():
    np.testing.assert_array_equal(power_spectrum(np.zeros(512), 512), np.zeros(257))


def test_power_spectrum_matches_dft_oracle_with_padding():
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1, 700)  # shorter than fft_size: exercises zero-pad
    p = power_spectrum(x, 1024)
    np.testing.assert_allclose(p, dft_power_oracle(x, 1024), atol=1e-9)


@pytest.mark.parametrize("n", [256, 512, 1024, 2048])
def test_power_spectrum_parseval(n):
    rng = np.random.default_rng(n)
    x = rng.uniform(-1, 1, n)
    p = power_spectrum(x, n)
    # One-sided spectrum: interior bins count twice, DC and Nyquist once.
    spectral = 2.0 * p.sum() - p[0] - p[n // 2]
    time_domain = float(np.sum(x * x))  # oracle never touches the FFT
    assert spectral == pytest.approx(time_domain, rel=1e-9)


def test_power_spectrum_rejects_long_frame():
    with pytest.raises(ValueError):
        power_spectrum(np.zeros(1025), 1024)


def test_fft_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        kernels.fft(np.zeros(12))


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not importable")
def test_fft_backends_agree():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, (8, 1024))
    with kernels.use_backend("numba"):
        a = kernels.fft_batch(x)
    with kernels.use_backend("numpy"):
        b = kernels.fft_batch(x)
    np.testing.assert_allclose(a, b, atol=1e-10)


# ---------------------------------------------------------------------------
# Mel scale and filterbank


def test_mel_scale_anchors():
    assert hz_to_mel(0.0) == 0.0
    assert mel_to_hz(0.0) == 0.0
    assert float(hz_to_mel(700.0)) == pytest.approx(2595.0 * math.log10(2.0), rel=1e-15)
    assert round(float(hz_to_mel(700.0)), 2) == 781.17


@given(st.floats(min_value=0.0, max_value=24000.0))
def test_mel_scale_round_trip(f):
    back = float(mel_to_hz(hz_to_mel(f)))
    assert math.isclose(back, f, rel_tol=1e-12, abs_tol=1e-9)


def test_mel_scale_monotonic():
    f = np.linspace(0, 8000, 200)
    m = hz_to_mel(f)
    assert np.all(np.diff(m) > 0)


def test_filterbank_shape_and_peaks(config):
    fb = build_mel_filterbank(config)
    assert fb.shape == (26, 513)
    assert np.all(fb >= 0)
    np.testing.assert_array_equal(fb.max(axis=1), np.ones(26))
    assert np.all(fb.sum(axis=1) > 0)


def test_filterbank_centers_strictly_increasing(config):
    peaks = build_mel_filterbank(config).argmax(axis=1)
    assert np.all(np.diff(peaks) > 0)
    hz = mel_filter_centers(config)
    assert np.all(np.diff(hz) > 0)
    assert hz[-1] < config.sample_rate / 2


def test_filterbank_matches_snapped_grid_oracle(config):
    fb = build_mel_filterbank(config)
    _, bins = mel_grid_oracle(config)
    for j in range(config.num_mel_filters):
        row = fb[j]
        assert row[bins[j + 1]] == 1.0
        support = np.nonzero(row)[0]
        assert support.min() > bins[j]
        assert support.max() < bins[j + 2]


def test_filterbank_collapse_raises():
    cfg = MfccConfig(frame_size=64, hop_size=16, fft_size=64, num_coeffs=12)
    with pytest.raises(ValueError, match="collapse"):
        build_mel_filterbank(cfg)


# ---------------------------------------------------------------------------
# DCT-II


def test_dct_constant_input():
    c = dct_ii(np.ones(26))
    assert c[0] == 26.0
    assert np.abs(c[1:]).max() < 1e-9


def test_dct_zero_input():
    np.testing.assert_array_equal(dct_ii(np.zeros(26), 12), np.zeros(12))


def test_dct_matches_direct_summation():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(26)
    np.testing.assert_allclose(dct_ii(v), dct_oracle(v, 26), atol=1e-9)
    np.testing.assert_allclose(dct_ii(v, 12), dct_oracle(v, 12), atol=1e-9)


def test_dct_rejects_empty():
    with pytest.raises(ValueError):
        dct_ii(np.zeros(0))


# ---------------------------------------------------------------------------
# Full pipeline


def test_silence_closed_form(config):
    clip = AudioClip.from_samples(np.zeros(RATE), RATE)
    frames = compute_mfcc(clip, config)
    assert len(frames) == 59
    c0 = config.num_mel_filters * math.log(config.log_floor)
    for i, frame in enumerate(frames):
        assert frame.coeffs[0] == pytest.approx(c0, rel=1e-12)
        assert np.abs(frame.coeffs[1:]).max() < 1e-9
        assert frame.rms == 0.0
        assert frame.timestamp == i * 256 / RATE
    assert config.frame_interval == 0.016


def test_too_short_clip_gives_no_frames(config):
    clip = AudioClip.from_samples(np.zeros(1023), RATE)
    assert compute_mfcc(clip, config) == []


@pytest.mark.parametrize("hops", [0, 1, 5])
def test_frame_count_formula(config, hops):
    clip = AudioClip.from_samples(np.zeros(1024 + 256 * hops), RATE)
    frames = compute_mfcc(clip, config)
    assert len(frames) == hops + 1
    assert frames[0].timestamp == 0.0


def test_rate_mismatch_raises(config):
    clip = AudioClip.from_samples(np.zeros(8000), 8000)
    with pytest.raises(ConfigMismatch):
        compute_mfcc(clip, config)


def test_tone_energy_lands_in_covering_filter(config):
    """A 440 Hz sine must put its filterbank argmax in a filter whose mel
    band brackets 440 Hz; energies are cross-checked against the DFT oracle."""
    t = np.arange(RATE) / RATE
    samples = 0.3 * np.sin(2 * np.pi * 440.0 * t)
    frame = samples[30 * 256 : 30 * 256 + 1024]
    processed = hamming_window(pre_emphasis_filter(frame, config.pre_emphasis))

    fb = build_mel_filterbank(config)
    energies = fb @ power_spectrum(processed, config.fft_size)
    oracle_energies = fb @ dft_power_oracle(processed, config.fft_size)
    np.testing.assert_allclose(energies, oracle_energies, atol=1e-9)

    j = int(np.argmax(energies))
    assert j == int(np.argmax(oracle_energies))
    pts, _ = mel_grid_oracle(config)
    mel_440 = 2595.0 * math.log10(1.0 + 440.0 / 700.0)
    assert pts[j] < mel_440 < pts[j + 2]


def test_compute_mfcc_is_deterministic(config):
    clip = AudioClip.from_samples(synth_vowel("o", duration=0.5), RATE)
    first = compute_mfcc(clip, config)
    second = compute_mfcc(clip, config)
    assert len(first) == len(second)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert a.rms == b.rms and a.timestamp == b.timestamp


@pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
def test_loudness_moves_only_c0(config, scale):
    # Support tones at every filter peak keep all 26 energies above the log
    # floor at every scale, so the scaling argument holds exactly: gain only
    # shifts the log energies by a constant, which lands entirely in c0.
    t = np.arange(RATE) / RATE
    base = synth_vowel("a", amplitude=0.02)
    for hz in mel_filter_centers(config):
        base = base + 0.0015 * np.sin(2 * np.pi * hz * t)
    assert np.abs(base * scale).max() <= 1.0

    ref = compute_mfcc(AudioClip.from_samples(base, RATE), config)
    scaled = compute_mfcc(AudioClip.from_samples(base * scale, RATE), config)
    c0_shift = config.num_mel_filters * math.log(scale**2)
    for a, b in zip(ref, scaled):
        assert b.coeffs[0] - a.coeffs[0] == pytest.approx(c0_shift, abs=1e-6)
        assert np.abs(b.coeffs[1:] - a.coeffs[1:]).max() < 1e-6


# ---------------------------------------------------------------------------
# Streaming analyzer


def test_streaming_first_frame_then_hops(config):
    stream = StreamingMfcc(config)
    assert stream.push(np.zeros(1023)) == []
    frames = stream.push(np.zeros(1))
    assert len(frames) == 1 and frames[0].timestamp == 0.0
    assert stream.push(np.zeros(255)) == []
    assert len(stream.push(np.zeros(1))) == 1


def test_streaming_empty_push(config):
    stream = StreamingMfcc(config)
    assert stream.push(np.zeros(0)) == []


def test_streaming_rejects_small_buffer(config):
    with pytest.raises(ValueError):
        StreamingMfcc(config, buffer=PcmRingBuffer(512))


def test_streaming_oversized_push_splits(config):
    rng = np.random.default_rng(19)
    samples = rng.uniform(-1, 1, 10 * 1024)
    stream = StreamingMfcc(config, buffer=PcmRingBuffer(2048))
    got = stream.push(samples)  # several times the buffer capacity at once
    want = compute_mfcc(AudioClip.from_samples(samples, RATE), config)
    assert len(got) == len(want)
    for a, b in zip(got, want):
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_streaming_matches_offline_for_any_chunking(config, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    total = data.draw(st.integers(min_value=1024, max_value=5000))
    samples = rng.uniform(-1, 1, total)
    want = compute_mfcc(AudioClip.from_samples(samples, RATE), config)

    stream = StreamingMfcc(config)
    got = []
    pos = 0
    while pos < total:
        step = data.draw(st.integers(min_value=1, max_value=total - pos))
        got.extend(stream.push(samples[pos : pos + step]))
        pos += step

    assert len(got) == len(want)
    for a, b in zip(got, want):
        assert a.timestamp == b.timestamp
        assert a.rms == pytest.approx(b.rms, abs=1e-12)
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-9)
