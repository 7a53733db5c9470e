class AdapterFailure(Exception):
    """Base class for adapter errors."""


class SchemaError(AdapterFailure):
    """Request or file contents violate the exchange contract."""


class SetupError(AdapterFailure):
    """A model backend is unavailable; the message explains how to set it up."""
