"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class LexnormError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(LexnormError):
    """Malformed input file (corpus, label, table, or mapping)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EncodingError(ParseError):
    """Input bytes are not valid UTF-8."""


class AlignmentError(LexnormError):
    """Two token-aligned sequences disagree in length or framing."""


class SamplingError(LexnormError):
    """Requested sample exceeds the available population."""


class MarkerCollisionError(LexnormError):
    """Prompt markers occur verbatim in the text to be marked."""


class BackendError(LexnormError):
    """LLM backend failed after exhausting retries."""


class CacheMissError(BackendError):
    """Replay backend has no stored response for a prompt."""


class UndefinedErrError(LexnormError):
    """ERR is undefined: the leave-as-is baseline is already perfect."""


class CoverageError(LexnormError):
    """Transliteration input contains unmapped, non-Latin code points."""


class TranslitDecodeError(LexnormError):
    """Latin-space text cannot be decoded back through the mapping table."""


class SegmentationError(LexnormError):
    """A token cannot be segmented with the given subword vocabulary."""


class PipelineAborted(LexnormError):
    """Pipeline stopped mid-run; partial predictions are attached."""

    def __init__(self, cause: Exception, partial: list, records: list):
        self.cause = cause
        self.partial = partial
        self.records = records
        super().__init__(f"pipeline aborted: {cause}")
