"""Exception hierarchy shared by every module."""


class NDSError(Exception):
    """Base class for all package errors."""


class DomainError(NDSError, ValueError):
    """A point or set lies outside the state space [0, 1]."""


class UsageError(NDSError, ValueError):
    """Invalid arguments or inconsistent inputs."""


class BudgetExceeded(NDSError, RuntimeError):
    """A cell/piece count exceeded the configured budget."""

    def __init__(self, what: str, count: int, budget: int):
        super().__init__(f"{what}: {count} exceeds budget {budget}")
        self.count = count
        self.budget = budget


DEFAULT_CELL_BUDGET = 50_000_000
