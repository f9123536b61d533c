"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
input problems (``InputError``) and numerical failures (``NumericalFailure``).
"""


class UnimodalError(Exception):
    """Base class for every error raised by this package."""


class InputError(UnimodalError, ValueError):
    pass


class NumericalFailure(UnimodalError, RuntimeError):
    pass


class DomainError(InputError):
    pass


class NotUnimodal(InputError):
    """A custom map failed the sampled S-unimodal axiom checks."""


class NotNicePoint(InputError):
    pass


class DegenerateConfiguration(InputError):
    pass


class NoFixedPoint(NumericalFailure):
    pass


class NotMonotone(NumericalFailure):
    pass


class CriticalHit(NumericalFailure):
    pass


class NonRecurrent(NumericalFailure):
    pass


class BisectionFailure(NumericalFailure):
    pass


class CascadeTooShallow(NumericalFailure):
    pass


class InsufficientReturns(NumericalFailure):
    pass


class InsufficientSamples(NumericalFailure):
    pass
