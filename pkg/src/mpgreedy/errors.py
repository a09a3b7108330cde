class MPGreedyError(Exception):
    """Base class for library errors."""


class BudgetExceeded(MPGreedyError):
    """An exhaustive enumeration would exceed its :class:`EvalBudget`."""


class InvalidSpec(MPGreedyError, ValueError):
    """Parameters violate an operation's preconditions."""


class NotPositiveDefinite(MPGreedyError, ValueError):
    """A matrix that must be positive definite failed to factor."""
