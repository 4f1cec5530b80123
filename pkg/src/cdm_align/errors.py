"""Exception hierarchy.

``CdmError`` covers every anticipated input/domain failure; the CLI maps it
to exit code 1.  Anything else escaping the engine is treated as an internal
invariant violation (exit code 2).
"""


class CdmError(Exception):
    """Base class for all input and domain errors raised by this package."""


class VocabularyError(CdmError):
    """Malformed vocabulary file: non-contiguous, duplicate, or invalid ids."""


class DegenerateTokenError(CdmError):
    """A token normalized to the empty string where a non-empty one is required."""


class DumpFormatError(CdmError):
    """Base for errors in the binary logits-dump format."""


class BadMagicError(DumpFormatError):
    pass


class VersionMismatchError(DumpFormatError):
    pass


class TruncatedPayloadError(DumpFormatError):
    pass


class NonFiniteValueError(DumpFormatError):
    """A logits payload contains NaN or infinity."""


class EmptySequenceError(CdmError):
    """Sequence alignment requires both token sequences to be non-empty."""


class CoverageMismatchError(CdmError):
    """A span alignment does not cover the positions of the matrix it is applied to."""


class KTooLargeError(CdmError):
    """Requested top-k exceeds the vocabulary size."""


class DirectionMismatchError(CdmError):
    """A mapping table was used against the wrong source/target orientation."""


class SequenceLengthMismatchError(CdmError):
    """Two matrices expected to share an aligned length do not."""


class RecordCountMismatchError(CdmError):
    """Student and teacher dumps carry different record counts."""


class TargetOutOfRangeError(CdmError):
    """A language-modeling target id falls outside the vocabulary."""
