"""Error taxonomy for the extraction pipeline.

Everything raised on purpose derives from ExtractionError so callers
(and the CLI) can catch one type and print the message.
"""


class ExtractionError(Exception):
    """Base class for expected extraction failures."""


class ModelUnavailable(ExtractionError):
    """Checkpoint or vocabulary cannot be located, downloaded, or parsed."""


class VocabMismatch(ExtractionError):
    """Embedding row count and vocabulary size disagree."""


class TaggerUnavailable(ExtractionError):
    """No tagging backend is installed or loadable."""


class ResourceUnavailable(ExtractionError):
    """The lexical database backing the word list is missing."""
