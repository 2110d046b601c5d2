"""Exception types shared across the pipeline."""


class CorpusError(Exception):
    """Fatal problem with an input corpus (missing, unreadable, inconsistent)."""


class BackendError(Exception):
    """An external classifier backend could not produce a result."""
