"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A model, protocol, or experiment parameter is out of range."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its domain."""


class DegeneratePosteriorError(RuntimeError):
    """A belief update eliminated all posterior mass.

    The observation was inconsistent with the belief support; callers are
    expected to fall back to the prior.
    """


class NotReadyError(RuntimeError):
    """A protocol operation was invoked before its preconditions were met."""
