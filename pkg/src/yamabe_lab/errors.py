"""Exception types raised by the solvers."""


class YamabeLabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(YamabeLabError, ValueError):
    """Invalid or inconsistent user input (CLI exit code 1)."""


class NumericalError(YamabeLabError, RuntimeError):
    """A numerical procedure failed to meet its contract (CLI exit code 2)."""


# ground state
class InvalidAmplitude(ConfigError):
    pass


class SupercriticalExponent(ConfigError):
    pass


class NonConvergedIntegration(NumericalError):
    pass


class BracketNotFound(NumericalError):
    pass


# moments
class ExponentMismatch(ConfigError):
    pass


# torus reduction
class GridTooCoarse(ConfigError):
    pass


class ShapeMismatch(ConfigError):
    pass


class ResolutionExceeded(ConfigError):
    pass


class SolverDiverged(NumericalError):
    pass


class ContractionFailed(NumericalError):
    pass


class MaxIters(NumericalError):
    pass
