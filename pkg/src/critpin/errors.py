"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ModelError`` -> 2, ``RegimeError`` -> 3,
``NumericError`` -> 4.
"""


class CritpinError(Exception):
    """Base class for library errors."""


class ModelError(CritpinError, ValueError):
    """Invalid model specification or configuration document."""


class RegimeError(CritpinError):
    """Operation not defined for the thermodynamic regime of the model."""


class ConditioningError(RegimeError):
    """Conditioning on a renewal at ``t`` when ``u(t) == 0``."""


class NumericError(CritpinError, ArithmeticError):
    """Root bracketing, convergence or accuracy-guard failure."""


class BudgetError(NumericError):
    """Requested table or state space exceeds the configured memory budget."""
