"""Exception hierarchy.

Two families matter to callers: ``MathStatusError`` marks an honest
mathematical outcome (a singular system, a degenerate recursion, a degree
that admits no counterexample) and maps to CLI exit code 2; everything else
derived from ``HulError`` is a usage or validation problem (exit code 1).
"""

from __future__ import annotations


class HulError(Exception):
    """Base class for all library errors."""


class DomainError(HulError, ValueError):
    """Argument outside the supported domain of a function."""


class UnsupportedOrderError(HulError, ValueError):
    """Bessel order that is not an integer or half-integer."""


class ConstraintError(HulError, ValueError):
    """Parameter violates a documented constraint (e.g. c <= sqrt(5))."""


class RangeError(HulError, ValueError):
    """Radius outside the parameter range of a curve."""


class ValidationError(HulError, ValueError):
    """Malformed input document; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class MathStatusError(HulError):
    """A well-posed computation whose answer is a mathematical failure."""

    status = "math-failure"

    def to_status(self) -> dict:
        return {"status": self.status, "message": str(self)}


class NoValidPairError(MathStatusError):
    status = "no-valid-pair"


class DepthError(MathStatusError):
    status = "depth-exhausted"


class DegeneracyError(MathStatusError):
    """Exactly singular step in a recursion; ``m`` is the offending order."""

    status = "exact-degeneracy"

    def __init__(self, message: str, m: int) -> None:
        super().__init__(message)
        self.m = m

    def to_status(self) -> dict:
        return {"status": self.status, "message": str(self), "m": self.m}


class InconsistentTraceError(MathStatusError):
    status = "inconsistent-traces"

    def __init__(self, message: str, n: int) -> None:
        super().__init__(message)
        self.n = n

    def to_status(self) -> dict:
        return {"status": self.status, "message": str(self), "n": self.n}


class NoiseError(MathStatusError):
    status = "noise"

    def __init__(self, message: str, estimate: float = float("nan")) -> None:
        super().__init__(message)
        self.estimate = estimate


class StiffnessError(MathStatusError):
    status = "stiffness"


class DegreeTooSmallError(MathStatusError):
    status = "degree-too-small"


class GridError(MathStatusError):
    status = "grid-ill-conditioned"


class ResolutionError(MathStatusError):
    status = "resolution"
