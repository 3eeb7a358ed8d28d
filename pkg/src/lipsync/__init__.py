"""Audio-to-viseme analysis engine: MFCC features, calibrated phoneme
classification, baked viseme tracks, and a streaming service.

The analysis API is exported here; the network layer lives in
`lipsync.service` / `lipsync.protocol` and the CLI in `lipsync.cli`
(kept out of the package root so importing the analysis code does not
pull in the web stack).
"""

from .audio import (
    AudioClip,
    PcmRingBuffer,
    StreamingResampler,
    parse_wav,
    resample_linear,
    write_wav_pcm16,
)
from .classify import (
    PhonemeProfile,
    PhonemeTemplate,
    StreamingClassifier,
    WeightVector,
    calibrate,
    classify_stream,
    deserialize_profile,
    profile_digest,
    score_frame,
    scores_to_weights,
    serialize_profile,
    smooth,
)
from .errors import (
    ConfigMismatch,
    DuplicateLabel,
    EmptyTrack,
    InsufficientVoicedFrames,
    LabelMismatch,
    LipSyncError,
    MalformedContainer,
    SchemaViolation,
    UnsupportedEncoding,
    UnsupportedVersion,
)
from .mfcc import MfccConfig, MfccFrame, StreamingMfcc, compute_mfcc
from .track import (
    VisemeFrame,
    VisemeTrack,
    bake,
    deserialize_track,
    sample_at,
    serialize_track,
)

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "PcmRingBuffer", "StreamingResampler", "parse_wav",
    "resample_linear", "write_wav_pcm16",
    "MfccConfig", "MfccFrame", "StreamingMfcc", "compute_mfcc",
    "PhonemeProfile", "PhonemeTemplate", "StreamingClassifier", "WeightVector",
    "calibrate", "classify_stream", "score_frame", "scores_to_weights", "smooth",
    "serialize_profile", "deserialize_profile", "profile_digest",
    "VisemeFrame", "VisemeTrack", "bake", "serialize_track", "deserialize_track",
    "sample_at",
    "LipSyncError", "MalformedContainer", "UnsupportedEncoding", "ConfigMismatch",
    "InsufficientVoicedFrames", "DuplicateLabel", "LabelMismatch",
    "SchemaViolation", "UnsupportedVersion", "EmptyTrack",
    "__version__",
]
