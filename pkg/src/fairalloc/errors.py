"""Error types shared across the toolkit."""


class ValidationError(ValueError):
    """Invalid input data.  ``field`` names the offending field or flag."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CapabilityError(RuntimeError):
    """Requested operation exceeds a documented size or mode limit."""
