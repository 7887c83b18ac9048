"""Exception types raised across the package.

All of them subclass :class:`ValueError` so callers that only care about
"bad input" can catch that.
"""


class DimensionError(ValueError):
    """Requested dimensions are invalid or exceed the element budget."""


class SparsityError(ValueError):
    """Sparsity level is incompatible with the ambient dimension."""


class RegimeError(ValueError):
    """Parameters fall outside the regime a formula is defined for."""


class ShapeMismatchError(ValueError):
    pass


class RankDeficientError(ValueError):
    """A column submatrix is numerically rank deficient."""


class BudgetError(ValueError):
    """An exhaustive scan would exceed the configured subset budget."""


class ConfigError(ValueError):
    pass


class DomainError(ValueError):
    """Argument outside the mathematical domain of a formula."""
