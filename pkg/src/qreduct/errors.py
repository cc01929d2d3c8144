"""Exception hierarchy shared by all qreduct modules."""


class QReductError(Exception):
    """Base class for every error raised by qreduct."""


class RegisterError(QReductError, ValueError):
    """Node labels are missing, duplicated or mismatched between operands."""


class AnnihilatedError(QReductError, ValueError):
    """A projection or normalization left a vector of (numerically) zero norm."""


class InfeasibleError(QReductError):
    """The simultaneous constraint system of a step has no solution.

    ``residual`` is the best least-squares residual that was achievable.
    """

    def __init__(self, message, residual=float("nan"), step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class PropagationConflict(QReductError, ValueError):
    """Classical propagation derived two different values for one node."""


class NetworkValidationError(QReductError, ValueError):
    """A network definition violates one or more structural invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NetworkParseError(QReductError, ValueError):
    """A network file could not be decoded."""


class ExperimentError(QReductError, ValueError):
    """An experiment description is malformed."""


class DegenerateNetworkError(InfeasibleError):
    """The network admits no consistent assignment even with every pin removed."""
