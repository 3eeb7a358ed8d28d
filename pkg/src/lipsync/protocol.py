"""Session protocol state machine, independent of any transport.

Wire format: JSON text frames both ways; raw binary frames carry audio
payloads and must be announced by the preceding text frame (UploadWav
or AudioChunk with a declared size). A SessionCore consumes incoming
frames and returns *effects* — messages to send plus playback commands —
so the state machine can be driven directly in tests without sockets.

Client->server message types:
    Hello{protocol_version}, LoadProfile{profile_id}, UploadWav{size},
    StartLive{sample_rate}, AudioChunk{size}, EndLive, Seek{t}
Server->client:
    Ready{session_id, labels}, TrackHeader{frame_interval, frame_count,
    audio_url}, Viseme{t, weights}, LiveViseme{t, weights}, Done,
    Error{code, message}
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import StreamingResampler
from .classify import PhonemeProfile, StreamingClassifier, deserialize_profile
from .errors import LipSyncError
from .mfcc import StreamingMfcc
from .track import VisemeTrack, bake

PROTOCOL_VERSION = 1
MAX_UPLOAD_BYTES = 25 * 1024 * 1024
MAX_CHUNK_BYTES = 64 * 1024
OUT_QUEUE_LIMIT = 256

PROFILE_SUFFIX = ".profile.json"


class ProfileStore:
    """Read-only set of calibrated profiles loaded from a directory."""

    def __init__(self, root: str | Path | None):
        self._profiles: dict[str, PhonemeProfile] = {}
        if root is not None:
            root = Path(root)
            if root.is_dir():
                for path in sorted(root.glob(f"*{PROFILE_SUFFIX}")):
                    profile_id = path.name[: -len(PROFILE_SUFFIX)]
                    self._profiles[profile_id] = deserialize_profile(path.read_bytes())

    def ids(self) -> list[str]:
        return sorted(self._profiles)

    def get(self, profile_id: str) -> PhonemeProfile:
        return self._profiles[profile_id]

    @property
    def default_id(self):
        ids = self.ids()
        return ids[0] if ids else None


# --- effects returned by SessionCore -------------------------------------

@dataclass(frozen=True)
class Send:
    message: dict


@dataclass(frozen=True)
class StartPlayback:
    track: VisemeTrack
    wav_bytes: bytes


@dataclass(frozen=True)
class SeekPlayback:
    t: float


def _error(code: str, message: str) -> Send:
    return Send({"type": "Error", "code": code, "message": message})


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class SessionCore:
    """One client session: handshake, mode transitions, audio ingestion.

    Thread-safe; a transport may invoke it from worker threads while the
    pacing task reports completion from the event loop. Every input —
    including garbage — yields effects, never an exception.
    """

    def __init__(self, store: ProfileStore, session_id: str | None = None):
        self.session_id = session_id or uuid.uuid4().hex
        self._store = store
        self._lock = threading.RLock()
        self._phase = "hello"
        self.mode = "idle"
        self.profile: PhonemeProfile | None = None
        self._pending_binary: tuple[str, int] | None = None
        self._live: tuple[StreamingResampler, StreamingMfcc, StreamingClassifier] | None = None
        self.uploaded_wav: bytes | None = None
        default = store.default_id
        if default is not None:
            self.profile = store.get(default)

    # -- helpers

    def _ready(self) -> Send:
        labels = list(self.profile.labels) if self.profile else []
        return Send({"type": "Ready", "session_id": self.session_id, "labels": labels})

    @property
    def audio_url(self) -> str:
        return f"/audio/{self.session_id}"

    # -- frame entry points

    def on_text(self, text: str) -> list:
        with self._lock:
            if self._pending_binary is not None:
                kind = self._pending_binary[0]
                return [_error("expected_binary",
                               f"awaiting the binary payload declared by {kind}")]
            try:
                msg = json.loads(text)
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                return [_error("bad_json", f"frame is not valid JSON: {e}")]
            if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
                return [_error("bad_message", "frame must be an object with a string 'type'")]
            mtype = msg["type"]
            if self._phase == "hello":
                if mtype != "Hello":
                    return [_error("not_ready", "first message must be Hello")]
                return self._on_hello(msg)
            handler = getattr(self, f"_on_{mtype.lower()}", None)
            if mtype == "Hello" or handler is None:
                return [_error("bad_message", f"unexpected message type {mtype!r}")]
            return handler(msg)

    def on_binary(self, data: bytes) -> list:
        with self._lock:
            if self._pending_binary is None:
                return [_error("unexpected_binary", "no binary payload was declared")]
            kind, size = self._pending_binary
            self._pending_binary = None
            if len(data) != size:
                return [_error("bad_message",
                               f"binary payload is {len(data)} bytes, declared {size}")]
            if kind == "wav":
                return self._ingest_wav(bytes(data))
            return self._ingest_chunk(data)

    def finish_playback(self) -> list:
        """Called by the transport when the pacing task sends the last frame."""
        with self._lock:
            if self.mode != "baked":
                return []
            self.mode = "idle"
            return [Send({"type": "Done"})]

    # -- client message handlers

    def _on_hello(self, msg) -> list:
        version = msg.get("protocol_version")
        if not isinstance(version, int) or isinstance(version, bool) or version != PROTOCOL_VERSION:
            return [_error("bad_message",
                           f"unsupported protocol_version {version!r}")]
        self._phase = "ready"
        return [self._ready()]

    def _on_loadprofile(self, msg) -> list:
        if self.mode != "idle":
            return [_error("busy", f"cannot switch profiles in {self.mode} mode")]
        profile_id = msg.get("profile_id")
        if not isinstance(profile_id, str):
            return [_error("bad_message", "profile_id must be a string")]
        try:
            self.profile = self._store.get(profile_id)
        except KeyError:
            return [_error("unknown_profile", f"no profile named {profile_id!r}")]
        return [self._ready()]

    def _on_uploadwav(self, msg) -> list:
        if self.mode != "idle":
            return [_error("busy", f"cannot upload in {self.mode} mode")]
        if self.profile is None:
            return [_error("no_profile", "load a profile before uploading")]
        size = msg.get("size")
        if not isinstance(size, int) or isinstance(size, bool) or size <= 0:
            return [_error("bad_message", "size must be a positive integer")]
        if size > MAX_UPLOAD_BYTES:
            return [_error("upload_too_large",
                           f"{size} bytes exceeds the {MAX_UPLOAD_BYTES} byte limit")]
        self._pending_binary = ("wav", size)
        return []

    def _on_startlive(self, msg) -> list:
        if self.mode != "idle":
            return [_error("busy", f"cannot start live capture in {self.mode} mode")]
        if self.profile is None:
            return [_error("no_profile", "load a profile before going live")]
        rate = msg.get("sample_rate")
        if not isinstance(rate, int) or isinstance(rate, bool) or rate <= 0:
            return [_error("bad_message", "sample_rate must be a positive integer")]
        config = self.profile.mfcc_config
        self._live = (
            StreamingResampler(rate, config.sample_rate),
            StreamingMfcc(config),
            StreamingClassifier(self.profile),
        )
        self.mode = "live"
        return [self._ready()]

    def _on_audiochunk(self, msg) -> list:
        if self.mode != "live":
            return [_error("not_live", "AudioChunk requires live mode")]
        size = msg.get("size")
        if (not isinstance(size, int) or isinstance(size, bool)
                or size <= 0 or size % 2 != 0):
            return [_error("bad_message", "size must be a positive even integer")]
        if size > MAX_CHUNK_BYTES:
            return [_error("chunk_too_large",
                           f"{size} bytes exceeds the {MAX_CHUNK_BYTES} byte limit")]
        self._pending_binary = ("chunk", size)
        return []

    def _on_endlive(self, msg) -> list:
        if self.mode != "live":
            return [_error("not_live", "EndLive requires live mode")]
        resampler, mfcc, classifier = self._live
        effects = self._emit_live(mfcc.push(resampler.flush()), classifier)
        self._live = None
        self.mode = "idle"
        effects.append(Send({"type": "Done"}))
        return effects

    def _on_seek(self, msg) -> list:
        if self.mode != "baked":
            return [_error("bad_seek", "Seek requires baked playback")]
        t = msg.get("t")
        if not _is_number(t) or not np.isfinite(t) or t < 0:
            return [_error("bad_seek", "t must be a nonnegative number")]
        return [SeekPlayback(float(t))]

    # -- binary payload handlers

    def _ingest_wav(self, data: bytes) -> list:
        try:
            track = bake(data, self.profile)
        except LipSyncError as e:
            return [_error("bad_audio", str(e))]
        self.uploaded_wav = data
        self.mode = "baked"
        header = Send({
            "type": "TrackHeader",
            "frame_interval": track.frame_interval,
            "frame_count": len(track.frames),
            "audio_url": self.audio_url,
        })
        return [header, StartPlayback(track, data)]

    def _ingest_chunk(self, data: bytes) -> list:
        if self.mode != "live":  # EndLive raced ahead of the payload
            return [_error("not_live", "live capture already ended")]
        resampler, mfcc, classifier = self._live
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
        return self._emit_live(mfcc.push(resampler.push(samples)), classifier)

    @staticmethod
    def _emit_live(frames, classifier) -> list:
        effects = []
        for frame in frames:
            weights = classifier.update(frame)
            effects.append(Send({
                "type": "LiveViseme",
                "t": weights.timestamp,
                "weights": weights.weights,
            }))
        return effects
