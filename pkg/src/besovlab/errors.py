"""Exception hierarchy shared by all modules.

Precondition failures map to CLI exit code 2, numerical degeneracy to 3.
"""


class BesovLabError(Exception):
    exit_code = 2


class ParameterError(BesovLabError, ValueError):
    pass


class ShapeError(BesovLabError, ValueError):
    pass


class ResolutionError(BesovLabError):
    pass


class TruncationError(BesovLabError):
    def __init__(self, message, tail_mass=None):
        super().__init__(message)
        self.tail_mass = tail_mass


class DomainError(BesovLabError):
    pass


class BudgetError(BesovLabError):
    pass


class FitError(BesovLabError):
    pass


class HypothesisError(BesovLabError):
    pass


class BoundaryError(BesovLabError):
    pass


class DescriptorError(BesovLabError, ValueError):
    pass


class DegeneracyError(BesovLabError):
    exit_code = 3
