"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for bad input, 3 for a violated numerical contract.
"""


class CanonTimeError(Exception):
    exit_code = 3


class InputError(CanonTimeError, ValueError):
    """Malformed or inconsistent input (schema, grid shape, ordering)."""

    exit_code = 2


class ZeroNorm(InputError):
    pass


class NotNormalized(InputError):
    pass


class NonUniformGrid(InputError):
    pass


class NarrowSpectrum(InputError):
    """The state has no normalizable time distribution on the real line."""


class NumericalContractError(CanonTimeError):
    exit_code = 3


class TruncationError(NumericalContractError):
    """Too much probability beyond the top of the energy grid."""


class GridResolution(NumericalContractError):
    pass


class CoverageError(NumericalContractError):
    """The time grid captures too little of the probability."""

    def __init__(self, message, distribution=None):
        super().__init__(message)
        self.distribution = distribution


class OscillatoryAccuracy(NumericalContractError):
    pass


class MomentDivergence(NumericalContractError):
    pass


class MonotonicityViolation(NumericalContractError):
    pass


class DegenerateDistribution(NumericalContractError):
    pass


class IllConditioned(NumericalContractError):
    pass


class CompletenessError(NumericalContractError):
    pass


class NotFound(NumericalContractError):
    def __init__(self, message, best_time=None, best_distance=None):
        super().__init__(message)
        self.best_time = best_time
        self.best_distance = best_distance
