"""Gateway error taxonomy.

GatewayError subclasses are the per-item failures run_parallel captures
in-slot; anything else escaping a worker is a programming error and
propagates.
"""

from __future__ import annotations


class GatewayError(Exception):
    """Base class for failures of a single structured completion."""


class AuthenticationError(GatewayError):
    """Missing or rejected credentials; never retried."""


class TransportError(GatewayError):
    """Request could not be completed after the allowed attempts."""

    def __init__(self, message: str, attempts: int, status: int | None = None) -> None:
        super().__init__(message)
        self.attempts = attempts
        self.status = status


class StructuredOutputError(GatewayError):
    """The model's reply failed schema or semantic validation even after
    the single repair re-ask."""

    def __init__(self, message: str, raw_text: str) -> None:
        super().__init__(message)
        self.raw_text = raw_text
