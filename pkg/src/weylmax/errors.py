"""Exception types shared across the package.

The CLI maps these to stable exit codes: InputError -> 2,
ResourceError -> 3, InvariantError -> 4.
"""


class InputError(ValueError):
    """Bad argument or malformed input data."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured memory or size guard."""


class InvariantError(RuntimeError):
    """A runtime self-check failed; results cannot be trusted."""
