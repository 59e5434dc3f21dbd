"""Exception types raised by the engine.

Every error the CLI can emit maps to one of these classes; the CLI prints
the class name on stderr so harnesses can match on it.
"""


class NeleError(Exception):
    """Base class for all engine errors."""


class WrongSampleRate(NeleError):
    pass


class EmptySignal(NeleError):
    pass


class MalformedSpectrogram(NeleError):
    pass


class SilentSpeech(NeleError):
    pass


class SilentNoise(NeleError):
    pass


class UnsupportedFormat(NeleError):
    pass


class DimensionMismatch(NeleError):
    pass


class NonPositiveGain(NeleError):
    pass


class SignalTooShort(NeleError):
    pass


class BadErrorRate(NeleError):
    pass


class BadMagic(NeleError):
    pass


class ShapeMismatch(NeleError):
    pass


class TruncatedBlob(NeleError):
    pass


class StateArchMismatch(NeleError):
    pass


class AllSilentUtterance(NeleError):
    pass


class BadGamma(NeleError):
    pass


class EmptyCorpus(NeleError):
    pass


class TooShort(NeleError):
    pass


class SilentInput(NeleError):
    pass


class EmptyInput(NeleError):
    pass


class SilentUnmodified(NeleError):
    pass


class MissingPair(NeleError):
    pass
