"""Exception types shared across the package."""


class ForagerError(Exception):
    """Base class for all docforager errors."""


# --- corpus ---

class EmptyDocument(ForagerError):
    """A source contained no extractable text."""


class MalformedSource(ForagerError):
    """A document source or manifest entry is structurally invalid."""


class DuplicateFilename(ForagerError):
    """Two sources in one collection share a filename."""


class EmptyCollection(ForagerError):
    """A collection was created with zero sources."""


class UnknownDocument(ForagerError):
    """Referenced document id does not exist."""


class SpanOutOfRange(ForagerError):
    """Character span falls outside the document text."""


# --- index ---

class ProviderUnavailable(ForagerError):
    """Remote embedding provider unreachable after retries."""


class ProviderMismatch(ForagerError):
    """Persisted index was built by a different embedding provider."""


# --- gateway ---

class MissingBinding(ForagerError):
    """A prompt placeholder was left unbound."""


class BackendUnavailable(ForagerError):
    """LLM backend unreachable after retries."""


class UnparseableResponse(ForagerError):
    """Model response did not contain the expected structure."""


class InvalidParameters(ForagerError):
    """A request violated the sampling-parameter contract for its prompt kind."""


# --- engine ---

class EmptyQuery(ForagerError):
    """Query text contained no usable parts."""


class InvalidScope(ForagerError):
    """Action scope referenced documents outside the collection, or was empty."""


class ActionFailed(ForagerError):
    """Whole-action failure (as opposed to a per-document error cell)."""


# --- notebook ---

class UnknownCell(ForagerError):
    """Referenced notebook cell does not exist."""


class UnknownRow(ForagerError):
    """Referenced result row does not exist."""


class UnknownColumn(ForagerError):
    """Referenced table column does not exist."""


class CannotCreateSuggestion(ForagerError):
    """Suggestion cells are system-created only."""


class NotFound(ForagerError):
    """Persisted object not found."""


class SchemaVersionMismatch(ForagerError):
    """Persisted file carries a schema version this build cannot read."""


# --- suggestions ---

class AlreadyResolved(ForagerError):
    """Suggestion cell was already accepted or dismissed."""


# --- service ---

class ConfigInvalid(ForagerError):
    """Service or CLI configuration is unusable."""
