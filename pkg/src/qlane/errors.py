"""Shared exception types for the qlane package."""


class InsufficientDataError(ValueError):
    """Raised when an operation has too little input to produce a result
    (e.g. an empty image half during lane clustering)."""


class PipelineStageError(RuntimeError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, original: Exception):
        super().__init__(f"stage '{stage}' failed: {original}")
        self.stage = stage
        self.original = original
