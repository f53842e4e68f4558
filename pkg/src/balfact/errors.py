"""Exception types and search budgets shared across the package."""

from __future__ import annotations

import os

#: Cap on the number of matrices an enumeration may materialise (q^(n^2)).
ENUMERATION_CAP = 2 ** 20

#: Default cap on inner iterations of exhaustive searches.
DEFAULT_ITERATION_BUDGET = 10 ** 9


def iteration_budget() -> int:
    """Iteration cap, overridable through the ``BALFACT_BUDGET`` environment variable."""
    raw = os.environ.get("BALFACT_BUDGET")
    if raw is None:
        return DEFAULT_ITERATION_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"BALFACT_BUDGET must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ValueError("BALFACT_BUDGET must be positive")
    return value


class BalfactError(Exception):
    """Base class for all errors raised by this package."""


class FieldSpecError(BalfactError, ValueError):
    """Malformed field description, non-prime characteristic or bad modulus."""


class ContextMismatch(BalfactError, TypeError):
    """Operands live in different fields (or matrices of different shape)."""


class UnsupportedField(BalfactError, ValueError):
    """The operation is not defined for this field or parameter range."""


class BudgetExceeded(BalfactError):
    """An exhaustive computation would exceed its configured budget."""

    def __init__(self, needed: int, budget: int, what: str = "search"):
        super().__init__(f"{what} needs {needed} iterations, budget is {budget}")
        self.needed = needed
        self.budget = budget


class NotFound(BalfactError):
    """No factorisation was produced.

    ``proven`` is true when an exhaustive search established that none exists.
    """

    def __init__(self, message: str, proven: bool):
        super().__init__(message)
        self.proven = proven


class DecisionNo(BalfactError):
    """The decision predicate rules out a factorisation for these parameters."""


class SearchExhausted(BalfactError):
    """A search that the decision predicate says must succeed came up empty.

    This signals a disagreement between the closed-form criterion and the
    exhaustive search and must be reported, never swallowed.
    """


class VerificationError(BalfactError, AssertionError):
    """A freshly constructed certificate failed re-verification (a bug)."""


def check_budget(needed: int, budget: int | None = None, what: str = "search") -> None:
    budget = iteration_budget() if budget is None else budget
    if needed > budget:
        raise BudgetExceeded(needed, budget, what)
