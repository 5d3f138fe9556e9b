"""Exception types raised by the solvers."""


class CCBVPError(Exception):
    """Base class for library errors."""


class DomainError(CCBVPError, ValueError):
    """An argument lies outside the domain of the requested map."""


class NoSolution(CCBVPError):
    """The requested solution does not exist for these parameters."""


class BranchUnavailable(CCBVPError):
    """The requested branch does not exist (e.g. Lower for lambda <= 0)."""


class DeadCoreRegime(NoSolution):
    """Shooting refused: lambda lies below the dead-core threshold."""


class Escaped(CCBVPError):
    """A shooting trajectory exceeded the blow-up ceiling."""

    def __init__(self, r_escape, message=None):
        self.r_escape = r_escape
        super().__init__(message or f"trajectory escaped at r={r_escape:.6g}")


class ConfigError(CCBVPError, ValueError):
    """Invalid CLI configuration."""
