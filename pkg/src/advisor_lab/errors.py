class ConfigurationError(ValueError):
    """Bad inputs: mismatched dimensions, unknown names, out-of-range parameters."""


class DomainError(RuntimeError):
    """Valid configuration but the requested computation is undefined on it."""
