"""Exception and warning types shared across the package."""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure (CLI exit code 1)."""


class SingularityError(NumericalError):
    """An integrand or inverse-engineering formula diverges without cancellation."""


class IntegratorError(NumericalError):
    """Time propagation left the physical domain (norm growth, trace drift)."""


class NoBracketError(NumericalError):
    """A root search interval contains no sign change."""


class PerturbativeRegimeWarning(UserWarning):
    """The second-order fidelity correction is too large to be trusted."""
