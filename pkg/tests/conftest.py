"""Shared fixtures: synthetic vowel signals, an independent WAV-writer
oracle, and a calibrated five-vowel profile reused across test modules.
"""

import struct

import numpy as np
import pytest

from lipsync import AudioClip, MfccConfig, calibrate
from lipsync.kernels import warm_up

RATE = 16000

# Formant-like recipes: disjoint sine sets so the templates are far apart.
# Total amplitude stays at 0.45 so a x2 loudness rescale cannot clip.
VOWEL_FORMANTS = {
    "a": (700, 1200, 2600),
    "e": (500, 1900, 2500),
    "i": (300, 2300, 3000),
    "o": (450, 800, 2830),
    "u": (250, 850, 2400),
}


def synth_vowel(label, duration=1.0, amplitude=0.15, rate=RATE, phase=0.0):
    """Sum of 3 sines at the vowel's formant frequencies."""
    t = np.arange(int(round(duration * rate))) / rate
    out = np.zeros_like(t)
    for f in VOWEL_FORMANTS[label]:
        out += amplitude * np.sin(2 * np.pi * f * t + phase)
    return out


def wav_bytes_oracle(samples, rate, bits=16, channels=1):
    """Hand-rolled WAV encoder, written independently of the package's
    writer so container tests have a second opinion on the byte layout.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if channels == 2:
        assert samples.ndim == 2 and samples.shape[1] == 2
        flat = samples.reshape(-1)
    else:
        flat = samples
    if bits == 16:
        payload = b"".join(
            struct.pack("<h", int(max(-32768, min(32767, round(s * 32768)))))
            for s in flat
        )
        block = 2 * channels
    elif bits == 8:
        payload = bytes(int(max(0, min(255, round(s * 128 + 128)))) for s in flat)
        block = channels
    else:
        raise ValueError(bits)
    out = bytearray()
    out += b"RIFF"
    out += struct.pack("<I", 36 + len(payload))
    out += b"WAVE"
    out += b"fmt "
    out += struct.pack("<IHHIIHH", 16, 1, channels, rate, rate * block, block, bits)
    out += b"data"
    out += struct.pack("<I", len(payload))
    out += payload
    return bytes(out)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile/caching cost must not land inside a timed test
    warm_up()


@pytest.fixture(scope="session")
def config():
    return MfccConfig()


@pytest.fixture(scope="session")
def vowel_clips():
    return {
        label: AudioClip.from_samples(synth_vowel(label), RATE)
        for label in VOWEL_FORMANTS
    }


@pytest.fixture(scope="session")
def profile(config, vowel_clips):
    return calibrate(vowel_clips, config)


@pytest.fixture(scope="session")
def profile_dir(tmp_path_factory, profile, config, vowel_clips):
    """Directory with two serialized profiles, as `lipsync serve` would use."""
    from lipsync.classify import serialize_profile

    root = tmp_path_factory.mktemp("profiles")
    (root / "default.profile.json").write_bytes(serialize_profile(profile))
    trio = calibrate({k: vowel_clips[k] for k in ("a", "e", "i")}, config)
    (root / "trio.profile.json").write_bytes(serialize_profile(trio))
    (root / "notes.txt").write_text("not a profile")
    return root
