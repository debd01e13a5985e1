"""Exception hierarchy shared across the package."""


class MorphUSVError(Exception):
    """Base class for every domain error raised by this package."""


class RangeError(MorphUSVError, ValueError):
    """An input lies outside the supported domain (expansion, duty cycle, ...)."""


class GeometryError(MorphUSVError, ValueError):
    """Mechanism geometry is inconsistent (e.g. arcsine argument outside [-1, 1])."""


class SaturationError(MorphUSVError, ValueError):
    """A thruster force exceeds its bound."""


class ParameterError(MorphUSVError, ValueError):
    """Hydrodynamic parameters violate positivity or symmetry."""


class NumericalError(MorphUSVError, ArithmeticError):
    """Integration produced a non-finite value."""


class ConfigError(MorphUSVError, ValueError):
    """A configuration file or object failed validation.

    ``key`` holds the dotted key path of the first violation when known.
    """

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class IdentificationError(MorphUSVError, RuntimeError):
    """System identification failed at every start point."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RankError(MorphUSVError, ValueError):
    """Too few distinct samples for the requested regression."""


class MisalignedError(MorphUSVError, ValueError):
    """Two time series that must share sample times do not."""


class PlanningError(MorphUSVError, ValueError):
    """A mission plan cannot be realised."""
