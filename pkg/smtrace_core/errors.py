from __future__ import annotations

from typing import Optional


class SMTraceError(Exception):
    """Base class for every error raised by smtrace_core."""


class PrecisionError(SMTraceError, RuntimeError):
    """
    The trusted window (or the working precision) is too short for the request.

    `claim_id` names the verification claim that ran out of room, when there is
    one; the CLI reports it and exits with status 3.
    """

    def __init__(self, message: str, claim_id: Optional[str] = None):
        super().__init__(message)
        self.claim_id = claim_id

    def with_claim(self, claim_id: str) -> "PrecisionError":
        if self.claim_id is None:
            self.claim_id = claim_id
        return self


class TableWindowError(PrecisionError):
    """A GTable entry was requested inside the support but outside the stored window."""


class VerificationError(SMTraceError):
    """A construction failed its own consistency check (plus condition, principal part, integrality)."""


class CacheIntegrityError(SMTraceError):
    """Cache file is malformed or its content hash does not match."""
