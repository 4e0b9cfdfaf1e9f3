"""Exception hierarchy shared across the toolkit."""


class TrimkitError(Exception):
    """Base class for all toolkit errors."""


class LexiconError(TrimkitError):
    """Bad lexicon file or unknown builtin lexicon name."""


class CorpusError(TrimkitError):
    """Unreadable or malformed corpus input."""


class ScorerError(TrimkitError):
    """A masked scorer failed to produce a distribution."""


class TemplateError(TrimkitError):
    """Unknown prompt template or unresolved placeholder."""


class SearchSpaceError(TrimkitError):
    """Exhaustive reconstruction refused: state count over budget."""


class GenerationError(TrimkitError):
    """Generation endpoint failure (transport, status, or empty answer)."""

    def __init__(self, message: str, request_id: str | None = None):
        super().__init__(message)
        self.request_id = request_id


class ConfigError(TrimkitError):
    """Invalid or missing configuration value."""
