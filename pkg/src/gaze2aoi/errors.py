"""Exception taxonomy shared by the whole package.

Every error carries a stable ``code`` (the class name) so the CLI and the
HTTP service can emit machine-parseable diagnostics without string matching.
"""

from __future__ import annotations


class Gaze2AOIError(Exception):
    """Base class; ``code`` is the stable machine-readable identifier."""

    @property
    def code(self) -> str:
        return type(self).__name__


class ConfigError(Gaze2AOIError):
    pass


# ---------------------------------------------------------------- parsing

class ParseError(Gaze2AOIError):
    pass


class MalformedRow(ParseError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class NonMonotoneTimestamp(ParseError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyRecording(ParseError):
    pass


class InterleavedFixation(ParseError):
    pass


class DuplicateTrackInFrame(ParseError):
    pass


class InvertedBox(ParseError):
    pass


class DuplicateClassId(ParseError):
    pass


class DuplicateClassName(ParseError):
    pass


class UnknownVideoFormat(ParseError):
    pass


# ------------------------------------------------------------ association

class FrameOutOfRange(Gaze2AOIError):
    pass


class UnknownTrack(Gaze2AOIError):
    pass


# -------------------------------------------------------------- keyframes

class BeforeFirstKeyFrame(Gaze2AOIError):
    pass


# ----------------------------------------------------------------- labels

class NotAKeyFrame(Gaze2AOIError):
    pass


class EmptyLabel(Gaze2AOIError):
    pass


# ---------------------------------------------------------------- tracking

class EmptyClassFilter(Gaze2AOIError):
    pass


class UnknownClass(Gaze2AOIError):
    pass


class NothingToProcess(Gaze2AOIError):
    pass


class AdapterNotFound(Gaze2AOIError):
    pass


class AdapterCrashed(Gaze2AOIError):
    pass


class InvalidAdapterOutput(Gaze2AOIError):
    pass


class UnknownJob(Gaze2AOIError):
    pass


# ---------------------------------------------------------------- rendering

class DecoderFailed(Gaze2AOIError):
    pass


class EncoderFailed(Gaze2AOIError):
    pass


# ----------------------------------------------------------------- service

class FileUnreadable(Gaze2AOIError):
    pass
