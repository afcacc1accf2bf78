"""Error hierarchy shared by every solver stage."""

from typing import Any, Dict, Optional


class EahError(Exception):
    """Base class for all solver errors."""

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    def __str__(self) -> str:
        if not self.detail:
            return self.message
        extras = ", ".join(f"{k}={v}" for k, v in self.detail.items())
        return f"{self.message} ({extras})"


# exact arithmetic / LP
class DimensionMismatch(EahError):
    pass


class EmptyProgram(EahError):
    pass


# polytopes
class UnboundedInput(EahError):
    pass


class PointOutsideSet(EahError):
    pass


class EmptyInputSet(EahError):
    pass


class DimensionTooLarge(EahError):
    pass


# ellipsoid / saddle
class OracleContractViolation(EahError):
    pass


class GerContractViolation(EahError):
    pass


class VerificationFailedAfterMaxEscalations(EahError):
    pass


# phi-equilibria
class GradientOracleFailure(EahError):
    pass


class NoFixedPoint(EahError):
    pass


class PurificationFailure(EahError):
    pass


class CertificateFailure(EahError):
    pass


# games and inputs
class ImperfectRecall(EahError):
    pass


class MalformedTree(EahError):
    pass


class InstanceTooLarge(EahError):
    pass


class GameFormatError(EahError):
    """Raised when an input file cannot be parsed into a game, polytope or result."""
