"""weylmax: exponential-sum experiments on maximal estimates for
periodic dispersive equations with polynomial symbols."""

from .errors import InputError, InvariantError, ResourceError

__version__ = "0.1.0"

__all__ = ["InputError", "InvariantError", "ResourceError", "__version__"]
