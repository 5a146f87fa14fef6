"""Exception hierarchy for pdmpjump."""


class PdmpError(Exception):
    """Base class for every error raised by this package."""


class ModelError(PdmpError, ValueError):
    """The model's local characteristics are inconsistent (e.g. a kernel row with no mass)."""


class DegeneracyError(PdmpError, ValueError):
    """A numerically singular basis or a vanishing denominator."""


class UnvisitedStateError(PdmpError, ValueError):
    """A state (or state pair) required downstream was never observed."""


class DegenerateVarianceError(PdmpError, ValueError):
    """A test statistic was requested with a zero variance estimate."""


class ToleranceError(PdmpError, RuntimeError):
    """A quadrature routine failed to reach its requested tolerance."""
