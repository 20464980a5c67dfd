"""Exception types shared across the package."""


class CellSearchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CellSearchError):
    """A configuration value or file is invalid."""


class CodecError(CellSearchError):
    """A genome does not match the expected bit layout."""


class ContractError(CellSearchError):
    """An internal precondition was violated (e.g. unset fitness)."""


class TransportError(CellSearchError):
    """Communication with an external worker process failed."""


class RunAborted(CellSearchError):
    """A search run was aborted before completion."""
