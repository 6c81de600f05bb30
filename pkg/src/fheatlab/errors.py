"""Exception hierarchy shared by every fheatlab module."""


class FHeatError(Exception):
    """Base class for all library errors."""


class ConfigurationError(FHeatError, ValueError):
    """Invalid parameters or an inconsistent scenario description."""


class DomainError(FHeatError, ValueError):
    """A radius or time outside the admissible domain."""


class PoleError(DomainError):
    """A quantity singular at r = 0 was requested at the pole."""


class HypothesisError(FHeatError):
    """Data violates the hypothesis class of a lemma or theorem."""


class SolverError(FHeatError, RuntimeError):
    """Newton iteration failed to converge."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history) if history is not None else []


class PositivityError(SolverError):
    """An iterate dropped below the positivity floor after full damping."""


class DivergenceError(FHeatError, ArithmeticError):
    """Finite-time blow-up of an ODE oracle."""

    def __init__(self, message, blowup_time=None):
        super().__init__(message)
        self.blowup_time = blowup_time


class FlowExtinctionError(FHeatError):
    """The metric scale of a backward Ricci flow reached zero."""
