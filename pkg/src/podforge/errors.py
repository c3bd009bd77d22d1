"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class PodforgeError(Exception):
    """Base class for all pipeline errors."""


class ProviderError(PodforgeError):
    """A backend (LLM, TTS, TTA, embedder) failed after retries."""


class ProviderTransportError(ProviderError):
    """Transient transport failure (connection, timeout, 5xx). Retried."""


class EmbeddingProviderError(ProviderError):
    pass


class SchemaError(PodforgeError):
    """A structured response could not be parsed into the declared payload."""


class ValidationError(PodforgeError):
    """A parsed structure breaks a domain invariant."""


class PreconditionError(PodforgeError, ValueError):
    pass


class StageError(PodforgeError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class MatchValidationError(ValidationError):
    pass


class LibraryTooSmallError(MatchValidationError, PreconditionError):
    pass


class EmptyLibraryError(PodforgeError):
    pass


class FormatError(PodforgeError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(PodforgeError):
    pass


class AudioDecodeError(PodforgeError):
    pass


class MissingClipError(PodforgeError):
    pass


class RateMismatchError(PodforgeError):
    pass


class DegenerateWindowError(PodforgeError, ValueError):
    pass


class AllStopwordsError(PodforgeError, ValueError):
    pass


class ConfigMismatchError(PodforgeError):
    pass


class RangeError(PodforgeError, ValueError):
    pass


class ConfigError(PodforgeError):
    pass
