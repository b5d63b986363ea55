"""Exception types shared across the package."""


class InvalidSpecError(ValueError):
    """A traffic class specification is malformed or of the wrong kind."""


class UnsupportedEnvelopeError(ValueError):
    """No deterministic envelope exists for the given class."""


class NoDecayError(ValueError):
    """The per-class envelope rate is too small for a positive decay rate."""


class NoPositiveRootError(ValueError):
    """The system is overloaded: the decay-rate condition has no positive root."""


class ConditionNotMetError(ValueError):
    """A bound's applicability condition fails for the given inputs."""


class InvalidInputError(ValueError):
    """Numeric input violates a documented precondition (ordering, shape, range)."""
