"""Exception hierarchy shared by all modules."""


class DSBTError(Exception):
    """Base class for every error raised by the package."""


class NumericalFailure(DSBTError):
    """A computation hit a degenerate point; carries coordinates when known."""

    def __init__(self, message, where=None):
        if where is not None:
            message = f"{message} at {where}"
        super().__init__(message)
        self.where = where


class SingularMatrix(NumericalFailure):
    pass


class ExponentOverflow(NumericalFailure):
    pass


class ZeroLambda(DSBTError, ValueError):
    pass


class DegenerateSeed(DSBTError, ValueError):
    pass


class DegeneratePoles(DSBTError, ValueError):
    pass


class VanishingDenominator(NumericalFailure):
    pass


class OnPole(NumericalFailure):
    pass


class IllConditioned(NumericalFailure):
    pass


class StencilTooSmall(DSBTError, ValueError):
    pass


class GridTooSmall(DSBTError, ValueError):
    pass


class QuadratureUnstable(NumericalFailure):
    pass


class ConfigInvalid(DSBTError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
