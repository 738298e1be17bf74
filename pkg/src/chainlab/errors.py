"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """Inputs are individually valid but violate an operation's precondition."""


class ConstructionError(RuntimeError):
    """A constructive procedure could not produce the requested object."""
