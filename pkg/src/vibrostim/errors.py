"""Exception taxonomy shared by every layer of the workbench.

Each error carries a stable ``code`` (used verbatim in API error bodies and
CLI messages) and an optional ``path`` naming the offending field.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"

    def __init__(self, message: str, *, path: str | None = None):
        super().__init__(message)
        self.message = message
        self.path = path

    def to_dict(self) -> dict:
        return {"code": self.code, "path": self.path, "message": self.message}


class ValidationError(WorkbenchError):
    """A parameter value violates its contract (range, type, permutation...)."""

    code = "validation"


class SchemaError(ValidationError):
    """A serialized document is malformed or carries unknown fields."""

    code = "schema"


class DomainError(WorkbenchError):
    """An argument lies outside an operation's mathematical domain."""

    code = "domain"


class WavFormatError(WorkbenchError):
    """A byte stream is not a decodable mono 16-bit PCM WAV file."""

    code = "wav-format"


class DeviceError(WorkbenchError):
    """Audio device enumeration or open failed, or the rate is unsupported."""

    code = "device"


class PlaybackLostError(WorkbenchError):
    """The output device vanished mid-playback; surfaced on the handle."""

    code = "playback-lost"


class IllegalTransition(WorkbenchError):
    """A session operation was called in a phase that does not permit it."""

    code = "illegal-transition"


class NotFoundError(WorkbenchError):
    """A referenced resource (buffer, session, handle) does not exist."""

    code = "not-found"


class StartupError(WorkbenchError):
    """The service could not start; the message includes a remedy."""

    code = "startup"
