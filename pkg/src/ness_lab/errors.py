"""Exception hierarchy shared by all ness_lab modules."""


class NessLabError(Exception):
    """Base class for every error raised by ness_lab."""


class NumericalError(NessLabError):
    """A computation could not deliver a result at the requested accuracy."""


class ConfigError(NessLabError):
    """Invalid scan specification or configuration file.

    ``field`` is the dotted key path and ``line`` the 1-based line in
    ``source`` when known.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None,
                 source: str | None = None):
        self.message = message
        self.field = field
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            where += f":{self.line}"
        if self.field:
            where += f": {self.field}"
        return f"{where}: {self.message}"


class DegenerateDispersion(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class DivergentSusceptibility(NumericalError):
    pass


class OnCriticalField(NumericalError):
    pass


class OutsideValidity(NumericalError):
    pass


class IsotropicPoint(NumericalError):
    pass


class PoorFit(NumericalError):
    pass


class NotAState(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


class DimensionMismatch(NessLabError, ValueError):
    pass


class UnstableDrift(NumericalError):
    pass


class SolveFailure(NumericalError):
    pass


class DegenerateModes(NumericalError):
    pass


class SystemTooSmall(NessLabError, ValueError):
    pass


class ZeroTemperatureBath(NessLabError, ValueError):
    pass


class ConventionUncalibrated(NumericalError):
    pass


class TooLarge(NessLabError, ValueError):
    pass


class DegenerateNESS(NumericalError):
    pass


class DegenerateModesWarning(UserWarning):
    """Reservoir modes share an energy; the phi/psi pairing is convention dependent."""
