"""Exception types shared by all modules."""


class RosenblattLabError(Exception):
    """Base class for library errors."""


class DomainError(RosenblattLabError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class AccuracyError(RosenblattLabError, RuntimeError):
    """A requested tolerance cannot be met with the available resolution."""
