"""Mel-frequency cepstral coefficient extraction.

Per frame: pre-emphasis -> Hamming window -> power spectrum (radix-2
FFT) -> triangular mel filterbank -> floored log -> truncated DCT-II.
The offline and streaming paths share one frame routine, so a chunked
stream produces the same numbers as a whole-clip analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio import AudioClip, PcmRingBuffer
from .errors import ConfigMismatch
from . import kernels

DEFAULT_SAMPLE_RATE = 16000


@dataclass(frozen=True)
class MfccConfig:
    """Analysis parameters. Defaults: 64 ms frames every 16 ms at 16 kHz."""

    frame_size: int = 1024
    hop_size: int = 256
    fft_size: int = 1024
    num_mel_filters: int = 26
    num_coeffs: int = 12
    pre_emphasis: float = 0.97
    sample_rate: int = DEFAULT_SAMPLE_RATE
    log_floor: float = 1e-10
    mel_low: float = 0.0
    mel_high: float | None = None

    def __post_init__(self):
        if self.mel_high is None:
            object.__setattr__(self, "mel_high", self.sample_rate / 2)
        if self.frame_size < 2:
            raise ValueError("frame_size must be at least 2")
        if not (0 < self.hop_size <= self.frame_size):
            raise ValueError("hop_size must be in (0, frame_size]")
        if self.fft_size < self.frame_size or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two >= frame_size")
        if not (0 < self.num_coeffs <= self.num_mel_filters):
            raise ValueError("num_coeffs must be in (0, num_mel_filters]")
        if not (0 <= self.pre_emphasis < 1):
            raise ValueError("pre_emphasis must be in [0, 1)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")
        if not (0 <= self.mel_low < self.mel_high <= self.sample_rate / 2):
            raise ValueError("need 0 <= mel_low < mel_high <= sample_rate/2")

    @property
    def frame_interval(self) -> float:
        """Seconds between successive frames."""
        return self.hop_size / self.sample_rate


@dataclass(frozen=True, eq=False)
class MfccFrame:
    """One analysis frame: cepstral coefficients plus source loudness."""

    timestamp: float
    coeffs: np.ndarray
    rms: float


def pre_emphasis_filter(samples, alpha: float) -> np.ndarray:
    """y[0] = x[0]; y[n] = x[n] - alpha * x[n-1]."""
    if not (0 <= alpha < 1):
        raise ValueError("alpha must be in [0, 1)")
    x = np.asarray(samples, dtype=np.float64)
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def hamming_window(frame) -> np.ndarray:
    """Apply w[n] = 0.54 - 0.46*cos(2*pi*n/(N-1)) elementwise."""
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise ValueError("frame must be nonempty")
    return x * _hamming(x.size)


@lru_cache(maxsize=8)
def _hamming(n: int) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))


def power_spectrum(frame, fft_size: int) -> np.ndarray:
    """P[k] = |X[k]|^2 / fft_size for k = 0..fft_size/2, zero-padding the frame."""
    x = np.asarray(frame, dtype=np.float64)
    if len(x) > fft_size:
        raise ValueError("frame longer than fft_size")
    padded = np.zeros(fft_size)
    padded[:len(x)] = x
    spec = kernels.fft(padded)
    half = fft_size // 2 + 1
    return (spec.real[:half] ** 2 + spec.imag[:half] ** 2) / fft_size


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def build_mel_filterbank(config: MfccConfig) -> np.ndarray:
    """Triangular filters at mel-equidistant centers, each peaking at 1.0.

    Returns a (num_mel_filters, fft_size/2 + 1) matrix. Raises if the
    FFT resolution cannot give every filter its own peak bin.
    """
    n_bins = config.fft_size // 2 + 1
    pts = np.linspace(hz_to_mel(config.mel_low), hz_to_mel(config.mel_high),
                      config.num_mel_filters + 2)
    bins = np.floor((config.fft_size + 1) * mel_to_hz(pts) / config.sample_rate).astype(int)
    bins = np.minimum(bins, n_bins - 1)
    if np.any(np.diff(bins[1:]) < 1):
        raise ValueError("mel filters collapse: fft_size too small for num_mel_filters")
    fb = np.zeros((config.num_mel_filters, n_bins))
    for j in range(config.num_mel_filters):
        left, center, right = bins[j], bins[j + 1], bins[j + 2]
        for i in range(left, center):
            fb[j, i] = (i - left) / (center - left)
        for i in range(center, right):
            fb[j, i] = (right - i) / (right - center)
    return fb


def mel_filter_centers(config: MfccConfig) -> np.ndarray:
    """Peak frequency in Hz of each filter row (useful for diagnostics)."""
    fb = _filterbank(config)
    return fb.argmax(axis=1) * config.sample_rate / config.fft_size


def dct_ii(log_energies, num_coeffs: int | None = None) -> np.ndarray:
    """Unnormalized DCT-II: c[k] = sum_m v[m] * cos(pi*k*(m+0.5)/M)."""
    v = np.asarray(log_energies, dtype=np.float64)
    m = len(v)
    if m == 0:
        raise ValueError("input must be nonempty")
    k = m if num_coeffs is None else num_coeffs
    return _dct_basis(k, m) @ v


@lru_cache(maxsize=8)
def _dct_basis(num_coeffs: int, m: int) -> np.ndarray:
    k = np.arange(num_coeffs)[:, None]
    n = np.arange(m)[None, :]
    return np.cos(np.pi * k * (n + 0.5) / m)


@lru_cache(maxsize=8)
def _filterbank(config: MfccConfig) -> np.ndarray:
    return build_mel_filterbank(config)


def _analyze_batch(frames: np.ndarray, config: MfccConfig):
    """(m, frame_size) raw sample rows -> ((m, num_coeffs) coeffs, (m,) rms)."""
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    y = frames.copy()
    y[:, 1:] -= config.pre_emphasis * frames[:, :-1]
    y *= _hamming(config.frame_size)
    if config.fft_size > config.frame_size:
        y = np.pad(y, ((0, 0), (0, config.fft_size - config.frame_size)))
    spec = kernels.fft_batch(y)
    half = config.fft_size // 2 + 1
    power = (spec.real[:, :half] ** 2 + spec.imag[:, :half] ** 2) / config.fft_size
    energies = power @ _filterbank(config).T
    log_e = np.log(np.maximum(energies, config.log_floor))
    coeffs = log_e @ _dct_basis(config.num_coeffs, config.num_mel_filters).T
    return coeffs, rms


def _frames_from_rows(coeffs: np.ndarray, rms: np.ndarray, starts, config: MfccConfig):
    return [
        MfccFrame(timestamp=start / config.sample_rate, coeffs=coeffs[i], rms=float(rms[i]))
        for i, start in enumerate(starts)
    ]


def compute_mfcc(clip: AudioClip, config: MfccConfig) -> list[MfccFrame]:
    """All complete frames of a clip at hop_size stride; partial tail dropped."""
    if clip.sample_rate != config.sample_rate:
        raise ConfigMismatch(
            f"clip rate {clip.sample_rate} != config rate {config.sample_rate}"
        )
    samples = clip.samples
    if len(samples) < config.frame_size:
        return []
    n_frames = (len(samples) - config.frame_size) // config.hop_size + 1
    starts = np.arange(n_frames) * config.hop_size
    rows = np.lib.stride_tricks.sliding_window_view(samples, config.frame_size)[::config.hop_size]
    rows = np.ascontiguousarray(rows[:n_frames], dtype=np.float64)
    coeffs, rms = _analyze_batch(rows, config)
    return _frames_from_rows(coeffs, rms, starts, config)


class StreamingMfcc:
    """Incremental analyzer: push chunks, collect frames at hop boundaries.

    Numerically identical to compute_mfcc on the concatenated stream.
    Oversized pushes are split internally so no pending window is ever
    evicted from the ring buffer.
    """

    def __init__(self, config: MfccConfig, buffer: PcmRingBuffer | None = None):
        self.config = config
        if buffer is None:
            buffer = PcmRingBuffer(max(4 * config.frame_size, 1 << 16))
        if buffer.capacity < config.frame_size:
            raise ValueError("buffer capacity must be at least frame_size")
        self.buffer = buffer
        self._next_start = 0

    def push(self, chunk) -> list[MfccFrame]:
        chunk = np.asarray(chunk, dtype=np.float64)
        out: list[MfccFrame] = []
        step = self.buffer.capacity - self.config.frame_size + 1
        for lo in range(0, len(chunk), step):
            self.buffer.push(chunk[lo:lo + step])
            out.extend(self._drain())
        return out

    def _drain(self) -> list[MfccFrame]:
        cfg = self.config
        starts = []
        while self._next_start + cfg.frame_size <= self.buffer.write_position:
            starts.append(self._next_start)
            self._next_start += cfg.hop_size
        if not starts:
            return []
        rows = np.stack([self.buffer.read_at(s, cfg.frame_size) for s in starts])
        coeffs, rms = _analyze_batch(rows, cfg)
        return _frames_from_rows(coeffs, rms, starts, cfg)
