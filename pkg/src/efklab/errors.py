"""Exception hierarchy shared by all solver modules."""


class EFKError(Exception):
    """Base class for every error raised by efklab."""


class DomainError(EFKError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(EFKError, ValueError):
    """Mode counts or array shapes do not match."""


class ConfigurationError(EFKError, ValueError):
    """Discretization or run parameters are inconsistent or under-resolved."""


class HistoryUnderrunError(EFKError):
    """A delayed lookup fell outside the stored history window."""

    def __init__(self, t, window):
        self.t = float(t)
        self.window = (float(window[0]), float(window[1]))
        super().__init__(
            f"history lookup at t={self.t:.6g} outside window "
            f"[{self.window[0]:.6g}, {self.window[1]:.6g}]"
        )


class DivergenceError(EFKError):
    def __init__(self, t, max_coeff):
        self.t = float(t)
        self.max_coeff = float(max_coeff)
        super().__init__(f"solution diverged at t={self.t:.6g} (max |a_k| = {self.max_coeff:.3g})")


class ConvergenceFailure(EFKError):
    """Picard iteration hit ``max_iters``; ``report`` holds the residual history."""

    def __init__(self, message, report):
        self.report = report
        super().__init__(message)


class CertificateRefused(EFKError):
    """Certificate mode was requested but the hypotheses do not hold."""


class BoundViolationError(EFKError):
    def __init__(self, message, fit=None):
        self.fit = fit
        super().__init__(message)
