"""Error types shared across the package.

Two classes of failure are distinguished so the command line driver can
map them onto exit codes: domain errors (bad values, violated
preconditions) and input format errors (unreadable or malformed files).
"""


class DomainError(ValueError):
    """A value violates a documented precondition or invariant."""


class InputFormatError(ValueError):
    """A file or config document could not be parsed."""
