"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI reports for it.
"""

from __future__ import annotations


class ArtifactError(Exception):
    exit_code = 2


class StructuralError(ArtifactError, ValueError):
    """Malformed input: shape mismatch, unknown point, wrong space."""

    exit_code = 2


class PreconditionError(ArtifactError, ValueError):
    """Well-formed input that violates an operation's precondition."""

    exit_code = 2


class InvariantViolation(ArtifactError):
    """A checked mathematical property failed; carries the offending witness."""

    exit_code = 1

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class GridTooCoarse(InvariantViolation):
    def __init__(self, message: str, achievable: float):
        super().__init__(message, witness={"achievable_eps": achievable})
        self.achievable = achievable


class Inconclusive(ArtifactError):
    """Finite data cannot decide the question; carries the probe transcript."""

    exit_code = 3

    def __init__(self, message: str, probes=None):
        super().__init__(message)
        self.probes = probes or []
