"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration. `path` names the offending field or table."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class StructuralError(KeyError):
    """Graph operation referenced an unknown node."""
