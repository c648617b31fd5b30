"""Shared exception types."""


class CapExceeded(RuntimeError):
    """A resource cap was hit; ``partial`` holds what was known at that point."""

    def __init__(self, message: str, partial: dict | None = None):
        super().__init__(message)
        self.partial = dict(partial or {})
