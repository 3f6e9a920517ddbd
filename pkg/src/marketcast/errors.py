"""Exception hierarchy shared across the toolkit.

The CLI maps these to exit codes: DataError -> 2, ModelFitError -> 3.
Plain ValueError/TypeError signal API misuse rather than bad inputs.
"""


class MarketcastError(Exception):
    """Base class for toolkit errors."""


class DataError(MarketcastError):
    """Input data violates a contract (bad CSV, missing column, too short)."""


class ModelFitError(MarketcastError):
    """A model could not be fitted or applied."""


class NonConvergenceError(ModelFitError):
    """Optimizer hit its iteration budget.

    Carries ``best`` (dict of best-so-far parameters and objective) so callers
    can inspect how far the search got.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best or {}


class NonStationaryError(ModelFitError):
    """Fitted AR polynomial has a root on or inside the unit circle."""


class DivergenceError(ModelFitError):
    """Training produced a non-finite loss. Carries the epoch index."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
