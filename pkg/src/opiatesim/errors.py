"""Exception hierarchy shared by the simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by opiatesim."""


# ligand binding
class InvalidDose(SimulationError, ValueError):
    pass


class SaturationExceeded(SimulationError):
    """A receptor population left the linear (far-from-saturation) regime."""


class ZeroAffinity(SimulationError, ValueError):
    pass


class NoBalancePossible(SimulationError):
    pass


class ThresholdUnreachable(SimulationError):
    """The saturation cap is reached before analgesia reaches the threshold."""


# superposition
class InvalidProbability(SimulationError, ValueError):
    pass


# scanner
class InvalidWindow(SimulationError, ValueError):
    pass


class UndefinedRatio(SimulationError, ZeroDivisionError):
    """C_AA is zero, so r = C_A / C_AA is undefined."""


# analysis
class InsufficientData(SimulationError):
    pass


class AllExcluded(SimulationError):
    pass


# configuration
class ConfigError(SimulationError, ValueError):
    """Raised for a bad configuration document; ``path`` names the field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SchemaError(ConfigError):
    pass


class RangeError(ConfigError):
    pass
