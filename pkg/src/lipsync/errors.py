"""Exception types shared across the engine."""


class LipSyncError(Exception):
    """Base class for all engine errors."""


class MalformedContainer(LipSyncError):
    """WAV container is structurally invalid (bad magic, truncated chunk)."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedEncoding(LipSyncError):
    """WAV container is valid but the audio encoding is not supported."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ConfigMismatch(LipSyncError):
    """Input was produced under a different analysis configuration."""


class InsufficientVoicedFrames(LipSyncError):
    """A calibration clip contains no frames above the silence threshold."""

    def __init__(self, label: str):
        super().__init__(f"no voiced frames for label {label!r}")
        self.label = label


class DuplicateLabel(LipSyncError):
    """The same phoneme label was supplied more than once."""

    def __init__(self, label: str):
        super().__init__(f"duplicate label {label!r}")
        self.label = label


class LabelMismatch(LipSyncError):
    """Two weight vectors carry different label sets."""


class SchemaViolation(LipSyncError):
    """A serialized document does not match its declared schema."""


class UnsupportedVersion(LipSyncError):
    """A serialized document declares a format version we cannot read."""

    def __init__(self, found: int, expected: int):
        super().__init__(f"format version {found} not supported (expected {expected})")
        self.found = found
        self.expected = expected


class EmptyTrack(LipSyncError):
    """A viseme track with no frames cannot be sampled."""
