"""Exception hierarchy shared by all pipeline stages."""


class XlnerError(Exception):
    """Base class for every error raised by this package."""


class ParseError(XlnerError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OffsetError(XlnerError):
    """A span violates the standoff invariants of its document."""


class SpanOutOfBounds(OffsetError):
    pass


class EmptyCover(XlnerError):
    """A character span covers no token (whitespace-only span)."""


class MaskOverlapsAnnotation(XlnerError):
    pass


class UnknownCategory(XlnerError):
    pass


class EmptyCorpus(XlnerError):
    pass


class DegeneratePair(XlnerError):
    """One side of a parallel pair has zero tokens."""


class DimensionMismatch(XlnerError):
    pass


class MisalignedSpan(XlnerError):
    """A span boundary falls strictly inside a token."""


class EmptyDataset(XlnerError):
    pass


class DivergedLoss(XlnerError):
    pass


class ConfigError(XlnerError):
    pass


class LineCountMismatch(XlnerError):
    pass


class StageError(XlnerError):
    """Wraps a failure inside one pipeline stage."""

    def __init__(self, stage, message, doc_id=None):
        self.stage = stage
        self.doc_id = doc_id
        where = f"[{stage}]" + (f" doc {doc_id}" if doc_id is not None else "")
        super().__init__(f"{where}: {message}")
