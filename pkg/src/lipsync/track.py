"""Baked viseme tracks: offline analysis results serialized for playback.

A track is the full classifier output for one audio file, stored on a
uniform time grid (one frame per analysis hop). The `.viseme.json`
format keeps sorted keys and 6-decimal weights so identical input bytes
always bake to identical output bytes; per-frame timestamps are derived
from the index rather than stored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .audio import parse_wav, resample_linear
from .classify import PhonemeProfile, WeightVector, classify_stream, profile_digest
from .errors import EmptyTrack, SchemaViolation, UnsupportedVersion
from .mfcc import compute_mfcc

TRACK_VERSION = 1

# Serialized weights carry 6 decimals, so a frame's rounded sum may
# exceed 1 by up to half an ulp-of-rounding per label.
_SUM_SLACK_PER_LABEL = 5e-7

VisemeFrame = WeightVector


@dataclass(frozen=True)
class VisemeTrack:
    labels: tuple[str, ...]
    frame_interval: float
    frames: tuple[VisemeFrame, ...]
    audio_digest: str
    profile_digest: str
    format_version: int = TRACK_VERSION

    def __post_init__(self):
        if self.frame_interval <= 0:
            raise ValueError("frame_interval must be positive")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        label_set = set(self.labels)
        for i, frame in enumerate(self.frames):
            if set(frame.weights) != label_set:
                raise ValueError(f"frame {i} labels do not match the track labels")
            if abs(frame.timestamp - i * self.frame_interval) > 1e-9:
                raise ValueError(f"frame {i} timestamp is off the frame grid")

    @property
    def duration_seconds(self) -> float:
        return len(self.frames) * self.frame_interval


def bake(wav_bytes: bytes, profile: PhonemeProfile) -> VisemeTrack:
    """Full offline pipeline: parse -> resample -> mfcc -> classify."""
    clip = parse_wav(wav_bytes)
    clip = resample_linear(clip, profile.mfcc_config.sample_rate)
    frames = compute_mfcc(clip, profile.mfcc_config)
    weights = classify_stream(frames, profile)
    return VisemeTrack(
        labels=profile.labels,
        frame_interval=profile.mfcc_config.frame_interval,
        frames=tuple(weights),
        audio_digest=clip.source_digest,
        profile_digest=profile_digest(profile),
    )


def serialize_track(track: VisemeTrack) -> bytes:
    doc = {
        "format_version": track.format_version,
        "labels": list(track.labels),
        "frame_interval": track.frame_interval,
        "audio_digest": track.audio_digest,
        "profile_digest": track.profile_digest,
        "frames": [
            [round(frame.weights[label], 6) for label in track.labels]
            for frame in track.frames
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


_TRACK_FIELDS = ("format_version", "labels", "frame_interval", "audio_digest",
                 "profile_digest", "frames")


def deserialize_track(data: bytes | str) -> VisemeTrack:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"track is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaViolation("track document must be a JSON object")
    version = doc.get("format_version")
    if not isinstance(version, int) or isinstance(version, bool):
        raise SchemaViolation("format_version must be an integer")
    if version != TRACK_VERSION:
        raise UnsupportedVersion(version, TRACK_VERSION)
    extra = set(doc) - set(_TRACK_FIELDS)
    if extra:
        raise SchemaViolation(f"unknown field(s) {sorted(extra)} in track")
    missing = set(_TRACK_FIELDS) - set(doc)
    if missing:
        raise SchemaViolation(f"missing field(s) {sorted(missing)} in track")
    labels = doc["labels"]
    if (not isinstance(labels, list) or not labels
            or not all(isinstance(l, str) for l in labels)):
        raise SchemaViolation("labels must be a non-empty array of strings")
    interval = doc["frame_interval"]
    if not isinstance(interval, (int, float)) or isinstance(interval, bool) or interval <= 0:
        raise SchemaViolation("frame_interval must be a positive number")
    for name in ("audio_digest", "profile_digest"):
        if not isinstance(doc[name], str):
            raise SchemaViolation(f"{name} must be a string")
    rows = doc["frames"]
    if not isinstance(rows, list):
        raise SchemaViolation("frames must be an array")
    sum_limit = 1.0 + 1e-9 + _SUM_SLACK_PER_LABEL * len(labels)
    frames = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(labels):
            raise SchemaViolation(f"frames[{i}] must be an array of {len(labels)} weights")
        total = 0.0
        for w in row:
            if isinstance(w, bool) or not isinstance(w, (int, float)) or not 0.0 <= w <= 1.0:
                raise SchemaViolation(f"frames[{i}] weight {w!r} out of range")
            total += w
        if total > sum_limit:
            raise SchemaViolation(f"frames[{i}] weights sum to {total}, above 1")
        frames.append(VisemeFrame(
            weights={label: float(w) for label, w in zip(labels, row)},
            timestamp=i * float(interval),
        ))
    try:
        return VisemeTrack(
            labels=tuple(labels),
            frame_interval=float(interval),
            frames=tuple(frames),
            audio_digest=doc["audio_digest"],
            profile_digest=doc["profile_digest"],
        )
    except ValueError as e:
        raise SchemaViolation(str(e)) from e


def sample_at(track: VisemeTrack, t: float) -> VisemeFrame:
    """Weights at time t, linearly interpolated; t is clamped to the track."""
    if not track.frames:
        raise EmptyTrack("cannot sample an empty track")
    if t <= 0.0:
        first = track.frames[0]
        return VisemeFrame(weights=dict(first.weights), timestamp=float(t))
    last_index = len(track.frames) - 1
    position = t / track.frame_interval
    lo = int(position)
    if lo >= last_index:
        last = track.frames[last_index]
        return VisemeFrame(weights=dict(last.weights), timestamp=float(t))
    frac = position - lo
    a, b = track.frames[lo], track.frames[lo + 1]
    weights = {
        label: a.weights[label] + (b.weights[label] - a.weights[label]) * frac
        for label in track.labels
    }
    return VisemeFrame(weights=weights, timestamp=float(t))
