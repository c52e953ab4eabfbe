"""Shared exception types.

DomainError: an argument lies outside a routine's mathematical domain.
RangeError: a parameter violates a model's admissible range; carries
    the offending bound so callers can report it.
GuardError: a desk-scale size guard tripped (inputs too large to
    enumerate honestly).  The CLI maps this to exit code 3.
"""

from __future__ import annotations


class SievelabError(Exception):
    pass


class DomainError(SievelabError, ValueError):
    pass


class RangeError(SievelabError, ValueError):
    def __init__(self, message: str, bound: float | None = None):
        super().__init__(message)
        self.bound = bound


class GuardError(SievelabError, RuntimeError):
    pass
