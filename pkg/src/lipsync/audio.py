"""WAV decoding, resampling and PCM buffering.

Everything downstream works on mono float64 samples in [-1, 1]. WAV
parsing is done directly on the byte level (RIFF chunk walk) so that
error positions can be reported and odd containers with extra chunks
(LIST, fact, ...) are tolerated.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedContainer, UnsupportedEncoding

WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Decoded mono audio: float64 samples in [-1, 1] plus provenance hash."""

    sample_rate: int
    samples: np.ndarray
    source_digest: str

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and (np.abs(samples).max() > 1.0 or not np.isfinite(samples).all()):
            raise ValueError("samples must be finite and within [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    @classmethod
    def from_samples(cls, samples, sample_rate: int) -> "AudioClip":
        """Build a clip from raw samples, hashing them for provenance."""
        arr = np.asarray(samples, dtype=np.float64)
        digest = hashlib.sha256(arr.tobytes() + struct.pack("<I", sample_rate)).hexdigest()
        return cls(sample_rate=sample_rate, samples=arr, source_digest=digest)


def parse_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into a mono AudioClip.

    Accepts integer PCM at 8/16/24/32 bits and 32-bit float, 1 or 2
    channels. Stereo is downmixed by per-sample channel average; integer
    samples are scaled by 1/2^(bits-1). Unknown chunks are skipped.
    """
    if len(data) < 12 or data[0:4] != b"RIFF":
        raise MalformedContainer("not a RIFF container", 0)
    if data[8:12] != b"WAVE":
        raise MalformedContainer("RIFF form is not WAVE", 8)

    fmt = None
    fmt_offset = 0
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + chunk_size > len(data):
            raise MalformedContainer(
                f"chunk {chunk_id!r} of size {chunk_size} overruns the file", pos
            )
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise MalformedContainer("fmt chunk shorter than 16 bytes", pos)
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
            fmt_offset = pos
        elif chunk_id == b"data":
            if fmt is None:
                raise MalformedContainer("data chunk before fmt chunk", pos)
            return _decode_data(data, fmt, fmt_offset, body_start, chunk_size)
        # any other chunk (LIST, fact, cue, ...) is skipped
        pos = body_start + chunk_size + (chunk_size & 1)
    raise MalformedContainer("no data chunk found", pos)


def _decode_data(data, fmt, fmt_offset, start, size) -> AudioClip:
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format not in (WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedEncoding(f"audio format code {audio_format}", fmt_offset)
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels", fmt_offset)
    if sample_rate <= 0:
        raise MalformedContainer("sample rate is zero", fmt_offset)

    raw = data[start:start + size]
    if audio_format == WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedEncoding(f"{bits}-bit float", fmt_offset)
        samples = np.frombuffer(raw[:len(raw) - len(raw) % 4], dtype="<f4").astype(np.float64)
        samples = np.clip(samples, -1.0, 1.0)
    elif bits == 8:
        samples = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif bits == 16:
        samples = np.frombuffer(raw[:len(raw) - len(raw) % 2], dtype="<i2").astype(np.float64) / 32768.0
    elif bits == 24:
        usable = len(raw) - len(raw) % 3
        b = np.frombuffer(raw[:usable], dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        val = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        val -= (val & 0x800000) << 1  # sign-extend
        samples = val.astype(np.float64) / 8388608.0
    elif bits == 32:
        samples = np.frombuffer(raw[:len(raw) - len(raw) % 4], dtype="<i4").astype(np.float64) / 2147483648.0
    else:
        raise UnsupportedEncoding(f"{bits}-bit integer PCM", fmt_offset)

    if channels == 2:
        samples = samples[:len(samples) - len(samples) % 2].reshape(-1, 2).mean(axis=1)
    digest = hashlib.sha256(data).hexdigest()
    return AudioClip(sample_rate=sample_rate, samples=samples, source_digest=digest)


def write_wav_pcm16(samples, sample_rate: int) -> bytes:
    """Encode mono samples as a 16-bit PCM WAV byte string."""
    arr = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.clip(np.round(arr * 32768.0), -32768, 32767).astype("<i2")
    body = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, WAVE_FORMAT_PCM, 1,
                                    sample_rate, sample_rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(body))
    return header + body


def _interp_positions(n_out: int, ratio: float, samples: np.ndarray) -> np.ndarray:
    # out[j] = s[i] + (s[i+1] - s[i]) * frac at position j*ratio, clamped at
    # the tail. The streaming resampler repeats these exact operations.
    pos = np.arange(n_out) * ratio
    idx = np.minimum(pos.astype(np.int64), len(samples) - 1)
    frac = pos - idx
    nxt = np.minimum(idx + 1, len(samples) - 1)
    frac[nxt == idx] = 0.0
    base = samples[idx]
    return base + (samples[nxt] - base) * frac


def resample_linear(clip: AudioClip, target_rate: int) -> AudioClip:
    """Linear-interpolation resampling; same-rate input is returned as is."""
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip
    n_out = int(round(len(clip.samples) * target_rate / clip.sample_rate))
    if n_out == 0 or len(clip.samples) == 0:
        out = np.zeros(0)
    else:
        ratio = clip.sample_rate / target_rate
        out = _interp_positions(n_out, ratio, clip.samples)
    return AudioClip(sample_rate=target_rate, samples=out,
                     source_digest=clip.source_digest)


class PcmRingBuffer:
    """Fixed-capacity sample buffer with a monotone absolute write position.

    Single producer, single consumer: one writer pushes chunks, one
    analyzer reads windows. Pushing past capacity evicts oldest samples.
    """

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.write_position = 0
        self._data = np.zeros(capacity, dtype=np.float64)

    @property
    def size(self) -> int:
        """Number of samples currently retained."""
        return min(self.write_position, self.capacity)

    def push(self, chunk) -> int:
        """Append samples; returns the new absolute write position."""
        chunk = np.asarray(chunk, dtype=np.float64)
        n = len(chunk)
        if n == 0:
            return self.write_position
        if n >= self.capacity:
            # only the tail survives; place it at its phase-correct slots
            tail = chunk[n - self.capacity:]
            first = (self.write_position + n - self.capacity) % self.capacity
            split = self.capacity - first
            self._data[first:] = tail[:split]
            self._data[:first] = tail[split:]
        else:
            start = self.write_position % self.capacity
            end = start + n
            if end <= self.capacity:
                self._data[start:end] = chunk
            else:
                split = self.capacity - start
                self._data[start:] = chunk[:split]
                self._data[:end - self.capacity] = chunk[split:]
        self.write_position += n
        return self.write_position

    def latest(self, n: int) -> np.ndarray:
        """The last n samples, ending at write_position."""
        return self.read_at(self.write_position - n, n)

    def read_at(self, start: int, n: int) -> np.ndarray:
        """Samples [start, start+n) in absolute stream coordinates."""
        if n < 0:
            raise ValueError("negative read length")
        if start < self.write_position - self.size or start + n > self.write_position:
            raise ValueError(
                f"window [{start}, {start + n}) not retained "
                f"(have [{self.write_position - self.size}, {self.write_position}))"
            )
        out = np.empty(n, dtype=np.float64)
        first = start % self.capacity
        end = first + n
        if end <= self.capacity:
            out[:] = self._data[first:end]
        else:
            split = self.capacity - first
            out[:split] = self._data[first:]
            out[split:] = self._data[:end - self.capacity]
        return out


class StreamingResampler:
    """Chunked linear resampler that matches resample_linear sample-for-sample.

    Output sample j sits at source position j*(source/target); it is
    emitted as soon as both bracketing source samples have arrived, so a
    chunked run equals the offline resample of the concatenation (flush()
    emits the clamped tail once the stream is known to be complete).
    """

    def __init__(self, source_rate: int, target_rate: int):
        if source_rate <= 0 or target_rate <= 0:
            raise ValueError("rates must be positive")
        self.source_rate = source_rate
        self.target_rate = target_rate
        self._ratio = source_rate / target_rate
        self._pending = np.zeros(0)  # source tail still needed for interpolation
        self._consumed = 0  # source samples no longer in _pending
        self._emitted = 0  # output samples produced so far

    def push(self, chunk) -> np.ndarray:
        chunk = np.asarray(chunk, dtype=np.float64)
        if self.source_rate == self.target_rate:
            return chunk.copy()
        self._pending = np.concatenate([self._pending, chunk])
        total = self._consumed + len(self._pending)
        if total < 2:
            return np.zeros(0)
        # emit every j whose upper neighbor floor(j*ratio)+1 already exists,
        # i.e. j*ratio < total-1
        bound = int(np.ceil((total - 1) / self._ratio)) + 1
        cand = np.arange(self._emitted, max(self._emitted, bound))
        pos = cand * self._ratio
        pos = pos[pos < total - 1]
        if len(pos) == 0:
            return np.zeros(0)
        idx = pos.astype(np.int64)
        frac = pos - idx
        local = idx - self._consumed
        base = self._pending[local]
        out = base + (self._pending[local + 1] - base) * frac
        self._emitted += len(pos)
        # drop source samples before floor(next_j*ratio), but always retain
        # the newest one so flush() can emit the clamped tail
        keep_from = int(self._emitted * self._ratio) - self._consumed
        keep_from = min(keep_from, max(len(self._pending) - 1, 0))
        if keep_from > 0:
            self._pending = self._pending[keep_from:]
            self._consumed += keep_from
        return out

    def flush(self) -> np.ndarray:
        """Emit the clamped tail so totals match the offline output length."""
        if self.source_rate == self.target_rate:
            return np.zeros(0)
        total = self._consumed + len(self._pending)
        n_out = int(round(total * self.target_rate / self.source_rate))
        out = []
        for j in range(self._emitted, n_out):
            pos = j * self._ratio
            idx = min(int(pos), total - 1)
            local = idx - self._consumed
            if idx >= total - 1:
                out.append(self._pending[total - 1 - self._consumed])
            else:
                frac = pos - idx
                base = self._pending[local]
                out.append(base + (self._pending[local + 1] - base) * frac)
        self._emitted = max(self._emitted, n_out)
        return np.asarray(out)
