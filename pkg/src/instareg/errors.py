"""Exception types shared across the package."""


class RegistrationError(Exception):
    """Base class for all library-raised errors."""


class InvalidInput(RegistrationError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateInput(RegistrationError, ValueError):
    """Input is numerically degenerate (coincident/collinear points, constant values)."""


class DegeneratePayoff(RegistrationError, ArithmeticError):
    """The population carries no payoff mass; the matching game cannot evolve."""


class InsufficientCorrespondences(InvalidInput):
    """Fewer correspondences than the operation needs."""


class TooDegenerate(DegenerateInput):
    """No usable (non-collinear) point sample exists in the candidate set."""


class MissingScores(InvalidInput):
    """External ranking scores required by the selected mode were not provided."""
