"""Exception types shared across the library."""


class ConfigurationError(ValueError):
    """Rejected configuration: invalid domain, grid, step size or override."""


class ExpressionError(ValueError):
    """Rejected coefficient expression (outside the allowed grammar)."""


class CertificationError(RuntimeError):
    """A numerical hypothesis check failed.

    Carries a witness so the failure can be reproduced: ``witness_time``
    and either ``witness_point`` (a coefficient-bound violation at (t, x))
    or ``witness_vector`` (a Rayleigh-quotient minimiser in basis
    coordinates).
    """

    def __init__(self, message, witness_time=None, witness_point=None,
                 witness_vector=None):
        super().__init__(message)
        self.witness_time = witness_time
        self.witness_point = witness_point
        self.witness_vector = witness_vector


class PropagationError(RuntimeError):
    """Non-finite state encountered during time integration."""

    def __init__(self, message, time=None, step_index=None):
        super().__init__(message)
        self.time = time
        self.step_index = step_index


class NonconvergenceError(RuntimeError):
    """A fixed-point iteration failed to converge; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
