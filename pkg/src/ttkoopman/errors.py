"""Exception and warning types shared across the library."""


class TTKoopmanError(Exception):
    """Base class for all library errors."""


class SizeCapError(TTKoopmanError):
    """A dense materialization would exceed the configured size cap."""


class DegenerateInputError(TTKoopmanError):
    """Input carries no usable signal (e.g. an all-zero matrix)."""


class IntegrationError(TTKoopmanError):
    """Adaptive ODE integration failed before reaching the requested time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


class SingularLogarithmError(TTKoopmanError):
    """An eigenvalue has (numerically) zero modulus; the logarithm is undefined."""


class BranchCutWarning(UserWarning):
    """An eigenvalue lies close to the negative real axis of the principal log."""


class ConditioningWarning(UserWarning):
    """A matrix involved in a similarity transform is badly conditioned."""


class NonRealCoefficientWarning(UserWarning):
    """A probed generator entry has an imaginary part above threshold."""
