"""Exception hierarchy shared by the solvers and the CLI."""


class WpcError(Exception):
    """Base class for every error raised by wpcdelay."""


class DomainError(WpcError, ValueError):
    """An argument lies outside the domain of the function."""


class DegenerateChannelError(DomainError):
    """Channel gain is zero or negative; every delay would be infinite."""


class InfeasibleSlotError(DomainError):
    """No uplink slot can deliver the payload with the given energy budget."""


class ConvergenceGuardError(WpcError):
    """Average delay integral diverges (fading order m <= 2)."""


class AccuracyError(WpcError):
    """Quadrature could not reach the requested tolerance within its budget."""


class BracketError(WpcError):
    """A bracketing search failed to find a sign change."""


class RootNotFoundError(WpcError):
    """A scalar root solve did not converge."""


class NewtonDivergenceError(WpcError):
    """Damped Newton iteration failed to reduce the residual to tolerance."""

    def __init__(self, message, gains=None, residual=None):
        super().__init__(message)
        self.gains = gains
        self.residual = residual


class CalibrationError(WpcError):
    """Multiplier calibration did not meet its stopping rule."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class SolverFailureRateError(WpcError):
    """Too many per-sample solver failures inside a Monte-Carlo run."""

    def __init__(self, message, failures=0, samples=0):
        super().__init__(message)
        self.failures = failures
        self.samples = samples
