"""Exception types shared across modules."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class DegenerateWindowError(ValueError):
    """A window with fewer than two blocks per side has no fork."""


class EnumerationBoundError(ValueError):
    """Exhaustive enumeration was requested beyond its size bound."""


class InsufficientResolutionError(ValueError):
    """Monte Carlo estimates carry no usable signal for a fit."""
