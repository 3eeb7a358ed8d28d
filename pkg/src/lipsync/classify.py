"""Calibrated phoneme templates and frame-to-blendweight classification.

A profile stores one template per phoneme: the mean of cepstral
coefficients c1.. over the voiced frames of a labeled reference clip.
c0 is excluded everywhere so scoring is invariant to loudness. Raw
cosine scores are sharpened, normalized into blend weights, and
low-pass smoothed over time.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .audio import AudioClip, resample_linear
from .errors import (
    ConfigMismatch,
    DuplicateLabel,
    InsufficientVoicedFrames,
    LabelMismatch,
    SchemaViolation,
    UnsupportedVersion,
)
from .mfcc import MfccConfig, MfccFrame, compute_mfcc

PROFILE_VERSION = 1

DEFAULT_SILENCE_RMS = 0.01
DEFAULT_SHARPNESS = 4.0
DEFAULT_SMOOTHING_TAU = 0.06


@dataclass(frozen=True)
class PhonemeTemplate:
    label: str
    coeffs: tuple[float, ...]  # c1.. only, c0 excluded
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        arr = np.asarray(self.coeffs)
        if not np.isfinite(arr).all() or not np.any(arr):
            raise ValueError(f"template for {self.label!r} must be finite and nonzero")


@dataclass(frozen=True)
class PhonemeProfile:
    templates: tuple[PhonemeTemplate, ...]
    mfcc_config: MfccConfig
    silence_rms_threshold: float = DEFAULT_SILENCE_RMS
    sharpening_exponent: float = DEFAULT_SHARPNESS
    smoothing_time_constant: float = DEFAULT_SMOOTHING_TAU
    format_version: int = PROFILE_VERSION

    def __post_init__(self):
        if len(self.templates) < 2:
            raise ValueError("a profile needs at least 2 templates")
        labels = [t.label for t in self.templates]
        if len(set(labels)) != len(labels):
            raise DuplicateLabel(next(l for l in labels if labels.count(l) > 1))
        want = self.mfcc_config.num_coeffs - 1
        for t in self.templates:
            if len(t.coeffs) != want:
                raise ValueError(
                    f"template {t.label!r} has {len(t.coeffs)} coefficients, expected {want}"
                )
        if self.sharpening_exponent <= 0:
            raise ValueError("sharpening_exponent must be positive")
        if self.smoothing_time_constant <= 0:
            raise ValueError("smoothing_time_constant must be positive")
        if self.silence_rms_threshold < 0:
            raise ValueError("silence_rms_threshold must be nonnegative")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.templates)


@dataclass
class WeightVector:
    """Blend weights per phoneme label at one instant; each in [0, 1], sum <= 1."""

    weights: dict[str, float]
    timestamp: float


def calibrate(
    labeled_clips: Mapping[str, AudioClip] | Iterable[tuple[str, AudioClip]],
    config: MfccConfig,
    silence_rms_threshold: float = DEFAULT_SILENCE_RMS,
    sharpening_exponent: float = DEFAULT_SHARPNESS,
    smoothing_time_constant: float = DEFAULT_SMOOTHING_TAU,
) -> PhonemeProfile:
    """Average voiced-frame coefficients of each labeled clip into templates.

    Clips at other sample rates are resampled on ingest. Raises
    InsufficientVoicedFrames if a clip has no frame with rms at or above
    the threshold, DuplicateLabel on repeated labels.
    """
    pairs = list(labeled_clips.items()) if isinstance(labeled_clips, Mapping) else list(labeled_clips)
    seen: set[str] = set()
    templates = []
    for label, clip in pairs:
        if label in seen:
            raise DuplicateLabel(label)
        seen.add(label)
        clip = resample_linear(clip, config.sample_rate)
        frames = compute_mfcc(clip, config)
        voiced = [f.coeffs[1:] for f in frames if f.rms >= silence_rms_threshold]
        if not voiced:
            raise InsufficientVoicedFrames(label)
        mean = np.mean(voiced, axis=0)
        templates.append(PhonemeTemplate(label=label, coeffs=tuple(float(v) for v in mean),
                                         sample_count=len(voiced)))
    return PhonemeProfile(
        templates=tuple(templates),
        mfcc_config=config,
        silence_rms_threshold=silence_rms_threshold,
        sharpening_exponent=sharpening_exponent,
        smoothing_time_constant=smoothing_time_constant,
    )


@lru_cache(maxsize=8)
def _template_matrix(profile: PhonemeProfile) -> np.ndarray:
    rows = np.asarray([t.coeffs for t in profile.templates])
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / norms


def score_frame(frame: MfccFrame, profile: PhonemeProfile) -> dict[str, float]:
    """Clamped cosine similarity of frame c1.. against every template.

    Frames below the silence threshold score 0 for every label.
    """
    if len(frame.coeffs) != profile.mfcc_config.num_coeffs:
        raise ConfigMismatch(
            f"frame has {len(frame.coeffs)} coefficients, profile expects "
            f"{profile.mfcc_config.num_coeffs}"
        )
    labels = profile.labels
    if frame.rms < profile.silence_rms_threshold:
        return {label: 0.0 for label in labels}
    v = np.asarray(frame.coeffs[1:], dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return {label: 0.0 for label in labels}
    sims = _template_matrix(profile) @ (v / norm)
    return {label: float(max(0.0, s)) for label, s in zip(labels, sims)}


def scores_to_weights(scores: Mapping[str, float], sharpening_exponent: float,
                      timestamp: float = 0.0) -> WeightVector:
    """Sharpen scores by an exponent and normalize to sum 1 (or all zero)."""
    if sharpening_exponent <= 0:
        raise ValueError("sharpening_exponent must be positive")
    powered = {label: s ** sharpening_exponent for label, s in scores.items()}
    total = sum(powered.values())
    if total == 0.0:
        return WeightVector(weights={label: 0.0 for label in scores}, timestamp=timestamp)
    return WeightVector(weights={label: p / total for label, p in powered.items()},
                        timestamp=timestamp)


def smooth(prev: WeightVector, raw: WeightVector, dt: float, tau: float) -> WeightVector:
    """First-order step toward raw: w = prev + (raw - prev) * (1 - exp(-dt/tau))."""
    if dt <= 0 or tau <= 0:
        raise ValueError("dt and tau must be positive")
    if prev.weights.keys() != raw.weights.keys():
        raise LabelMismatch(f"{sorted(prev.weights)} vs {sorted(raw.weights)}")
    blend = 1.0 - math.exp(-dt / tau)
    weights = {}
    for label, target in raw.weights.items():
        w = prev.weights[label] + (target - prev.weights[label]) * blend
        weights[label] = min(1.0, max(0.0, w))
    return WeightVector(weights=weights, timestamp=raw.timestamp)


class StreamingClassifier:
    """Per-session classifier state: scores, sharpens and smooths each frame."""

    def __init__(self, profile: PhonemeProfile):
        self.profile = profile
        self._prev: WeightVector | None = None

    def update(self, frame: MfccFrame) -> WeightVector:
        raw = scores_to_weights(
            score_frame(frame, self.profile),
            self.profile.sharpening_exponent,
            timestamp=frame.timestamp,
        )
        if self._prev is None:
            result = raw
        else:
            result = smooth(self._prev, raw, frame.timestamp - self._prev.timestamp,
                            self.profile.smoothing_time_constant)
        self._prev = result
        return result


def classify_stream(frames: Iterable[MfccFrame], profile: PhonemeProfile) -> list[WeightVector]:
    """score -> sharpen -> smooth over a timestamp-ordered frame sequence."""
    state = StreamingClassifier(profile)
    return [state.update(frame) for frame in frames]


# ---------------------------------------------------------------------------
# profile (de)serialization: versioned JSON with a fixed field set

_CONFIG_FIELDS = ("frame_size", "hop_size", "fft_size", "num_mel_filters", "num_coeffs",
                  "pre_emphasis", "sample_rate", "log_floor", "mel_low", "mel_high")
_PROFILE_FIELDS = ("format_version", "mfcc_config", "templates", "silence_rms_threshold",
                   "sharpening_exponent", "smoothing_time_constant")
_TEMPLATE_FIELDS = ("label", "coeffs", "sample_count")


def serialize_profile(profile: PhonemeProfile) -> bytes:
    doc = {
        "format_version": profile.format_version,
        "mfcc_config": {name: getattr(profile.mfcc_config, name) for name in _CONFIG_FIELDS},
        "templates": [
            {"label": t.label, "coeffs": list(t.coeffs), "sample_count": t.sample_count}
            for t in profile.templates
        ],
        "silence_rms_threshold": profile.silence_rms_threshold,
        "sharpening_exponent": profile.sharpening_exponent,
        "smoothing_time_constant": profile.smoothing_time_constant,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def profile_digest(profile: PhonemeProfile) -> str:
    """Hex SHA-256 of the canonical profile serialization."""
    return hashlib.sha256(serialize_profile(profile)).hexdigest()


def _require_keys(obj: dict, allowed: tuple[str, ...], where: str) -> None:
    extra = set(obj) - set(allowed)
    if extra:
        raise SchemaViolation(f"unknown field(s) {sorted(extra)} in {where}")
    missing = set(allowed) - set(obj)
    if missing:
        raise SchemaViolation(f"missing field(s) {sorted(missing)} in {where}")


def deserialize_profile(data: bytes | str) -> PhonemeProfile:
    """Strict parse of a profile document; unknown fields are rejected."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"profile is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaViolation("profile document must be a JSON object")
    version = doc.get("format_version")
    if not isinstance(version, int) or isinstance(version, bool):
        raise SchemaViolation("format_version must be an integer")
    if version != PROFILE_VERSION:
        raise UnsupportedVersion(version, PROFILE_VERSION)
    _require_keys(doc, _PROFILE_FIELDS, "profile")
    cfg = doc["mfcc_config"]
    if not isinstance(cfg, dict):
        raise SchemaViolation("mfcc_config must be an object")
    _require_keys(cfg, _CONFIG_FIELDS, "mfcc_config")
    if not isinstance(doc["templates"], list):
        raise SchemaViolation("templates must be an array")
    templates = []
    for i, t in enumerate(doc["templates"]):
        if not isinstance(t, dict):
            raise SchemaViolation(f"templates[{i}] must be an object")
        _require_keys(t, _TEMPLATE_FIELDS, f"templates[{i}]")
        if not isinstance(t["coeffs"], list):
            raise SchemaViolation(f"templates[{i}].coeffs must be an array")
        templates.append(t)
    try:
        config = MfccConfig(**cfg)
        profile = PhonemeProfile(
            templates=tuple(
                PhonemeTemplate(label=t["label"], coeffs=tuple(float(c) for c in t["coeffs"]),
                                sample_count=t["sample_count"])
                for t in templates
            ),
            mfcc_config=config,
            silence_rms_threshold=doc["silence_rms_threshold"],
            sharpening_exponent=doc["sharpening_exponent"],
            smoothing_time_constant=doc["smoothing_time_constant"],
        )
    except DuplicateLabel:
        raise
    except (TypeError, ValueError) as e:
        raise SchemaViolation(f"invalid profile values: {e}") from e
    return profile
