"""Exception types shared across the package."""


class SemgraphError(Exception):
    """Base class for all semgraph errors."""


class NotFound(SemgraphError):
    """A referenced document, chunk, or token does not exist."""


class EmptyChunk(SemgraphError):
    """Attempted to insert a chunk with empty text."""


class InvalidAnchor(SemgraphError):
    """Anchor vector is not unit-norm within tolerance."""


class EmptyInput(SemgraphError):
    """An operation that requires a nonempty input received an empty one."""


class InvalidState(SemgraphError):
    """The graph is not in a state that permits the requested operation."""


class IndexCorrupt(SemgraphError):
    """Index file failed structural or checksum validation.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class VersionMismatch(SemgraphError):
    """Index file was written by an unsupported format version."""


class ProviderUnavailable(SemgraphError):
    """Embedding provider could not be reached. Retryable."""

    retryable = True


class DimensionMismatch(SemgraphError):
    """Embedding provider changed its output dimension mid-run. Fatal."""

    retryable = False


class InvalidSpan(SemgraphError):
    """A requested character span is out of bounds or empty."""


class EmptyIndex(SemgraphError):
    """Query was issued against an index containing no chunks."""


class MissingJudgment(SemgraphError):
    """A run-file query has no entry in the relevance judgments."""

    def __init__(self, query_id: str):
        super().__init__(f"no relevance judgment for query {query_id!r}")
        self.query_id = query_id


class ConfigError(SemgraphError):
    """Configuration failed validation at load time."""
