"""Exception hierarchy shared across the package."""


class TocSegError(Exception):
    """Base class for all errors raised by tocseg."""


# core model
class InvalidTocError(TocSegError, ValueError):
    pass


class IndexOutOfRangeError(TocSegError, ValueError):
    pass


class LevelOutOfRangeError(TocSegError, IndexError):
    pass


class InvalidSegmentationError(TocSegError, ValueError):
    pass


# ingestion
class TranscriptParseError(TocSegError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvariantViolationError(TocSegError, ValueError):
    def __init__(self, message, sentence_index=None):
        super().__init__(message)
        self.sentence_index = sentence_index


class EmptyIntervalsError(TocSegError, ValueError):
    pass


class UnmappableIntervalError(TocSegError, ValueError):
    pass


class MissingSpeakerError(TocSegError, ValueError):
    pass


class TooFewSpeakersError(TocSegError, ValueError):
    pass


# toc format
class UnparseableTocError(TocSegError, ValueError):
    pass


class AllEntriesInvalidError(TocSegError, ValueError):
    pass


# metrics
class LengthMismatchError(TocSegError, ValueError):
    pass


class InvalidWindowError(TocSegError, ValueError):
    pass


# texttiling
class ProviderError(TocSegError, RuntimeError):
    pass


# llm pipeline
class BudgetExceededError(TocSegError, ValueError):
    pass


class ChatError(TocSegError, RuntimeError):
    """Transport-level failure talking to a chat endpoint."""

    retryable = True


class NetworkError(ChatError):
    pass


class AuthError(ChatError):
    retryable = False


class ChatTimeoutError(ChatError):
    pass


class RateLimitedError(ChatError):
    pass


class GenerationFailedError(TocSegError, RuntimeError):
    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class EmptyOutputError(TocSegError, ValueError):
    pass


# eval harness
class EmptyInputError(TocSegError, ValueError):
    pass


class TooFewFoldsError(TocSegError, ValueError):
    pass


class DimensionConflictError(TocSegError, ValueError):
    pass
