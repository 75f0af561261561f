"""Exception hierarchy shared by the library and the command line."""


class QKRError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(QKRError, ValueError):
    pass


class DimensionError(QKRError, ValueError):
    """Raised when a state and an operator live on different lattices."""


class ConfigurationError(QKRError, ValueError):
    pass


class BesselRangeError(QKRError, ValueError):
    pass


class ResonanceConditionError(QKRError, ValueError):
    """Raised when a closed form is requested away from its validity region."""


class NumericIntegrityError(QKRError, ArithmeticError):
    pass
