"""Exception hierarchy shared by all modules."""


class LcmdivError(Exception):
    """Base class for package errors."""


class DomainError(LcmdivError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NotConvergedError(LcmdivError, RuntimeError):
    """An operation required a converged fit and did not get one."""


class RankDeficiencyError(LcmdivError, RuntimeError):
    """A Gram matrix is numerically singular; carries the observed rank."""

    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


class InputFormatError(LcmdivError, ValueError):
    """A design, counts, plan or chain file failed to parse."""
