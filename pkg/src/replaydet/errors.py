"""Exception hierarchy shared by every stage of the toolkit."""


class ReplayDetError(Exception):
    """Base class for all errors raised by replaydet."""


class AudioError(ReplayDetError):
    pass


class UnreadableAudioError(AudioError):
    """The file is missing or is not a RIFF/WAVE container."""


class UnsupportedEncodingError(AudioError):
    """The WAVE file is not 16-bit PCM."""


class EmptyAudioError(AudioError):
    """The file decodes to zero samples."""


class SignalTooShortError(ReplayDetError):
    """The signal cannot hold a single analysis frame or window."""


class DegenerateFrameError(ReplayDetError):
    """A frame (or a whole utterance) carries no energy to model."""


class ShapeError(ReplayDetError, ValueError):
    """Array dimensions do not match what an operation expects."""


class FormatError(ReplayDetError):
    """A binary or text artifact does not match its file schema."""


class ConfigError(ReplayDetError, ValueError):
    """Invalid configuration value, unknown key or bad hyperparameter."""


class InsufficientDataError(ReplayDetError):
    """Too few frames, rows or classes for the requested estimation."""
