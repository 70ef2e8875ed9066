"""Exception taxonomy shared by all latentsynth modules."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class InvalidState(RuntimeError):
    """An operation was invoked on an object in the wrong state."""


class TrainingDiverged(RuntimeError):
    """A non-finite loss or gradient appeared during training."""


class CheckpointError(RuntimeError):
    """Base class for checkpoint read/write failures."""


class CheckpointFormatError(CheckpointError):
    """The file is not a recognizable checkpoint (bad magic)."""


class UnsupportedVersion(CheckpointError):
    """The checkpoint was written by a newer format revision."""


class CorruptCheckpoint(CheckpointError):
    """The checkpoint is structurally damaged (truncated or inconsistent)."""


class WavParseError(RuntimeError):
    """The file is not a well-formed RIFF/WAVE stream."""


class UnsupportedWavFormat(RuntimeError):
    """The WAV encoding is valid but outside the supported subset."""
