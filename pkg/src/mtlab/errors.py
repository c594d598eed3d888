"""Exception types shared across mtlab.

Plain domain/range problems raise ``ValueError``; the subclasses below let the
command line map failures onto distinct exit codes.
"""


class PreconditionError(ValueError):
    """An operation's hypothesis is not met by the input."""


class BudgetError(ValueError):
    """Input exceeds the enumeration budget."""
