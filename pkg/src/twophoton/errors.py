"""Exception hierarchy.

Every error raised on purpose by the package derives from `TwoPhotonError`.
The CLI maps the three families below onto its exit codes.
"""


class TwoPhotonError(Exception):
    """Base class for all package errors."""


class ConfigError(TwoPhotonError, ValueError):
    """Invalid user input: parameters, spaces, run configurations."""


class InvalidSpaceError(ConfigError):
    pass


class InvalidEmbeddingError(ConfigError):
    pass


class UnsupportedError(ConfigError):
    """Operation not defined for the given model (e.g. N on three levels)."""


class NumericalFailure(TwoPhotonError, ArithmeticError):
    """A solver could not produce a trustworthy result."""


class NonUniqueSteadyStateError(NumericalFailure):
    pass


class DegenerateParametersError(NumericalFailure):
    pass


class StepSizeError(NumericalFailure):
    pass


class UndefinedEstimateError(NumericalFailure):
    pass


class ConvergenceError(TwoPhotonError):
    """Truncation ladder exhausted without the observables settling.

    ``drift`` holds the last relative change of each monitored observable.
    """

    def __init__(self, message, drift=None, last_spec=None):
        super().__init__(message)
        self.drift = dict(drift or {})
        self.last_spec = last_spec
