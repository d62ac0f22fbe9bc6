"""Exception hierarchy. Every error maps to a CLI exit code."""


class ResoniaError(Exception):
    """Base class. ``exit_code`` is used by the CLI."""

    exit_code = 3


class ConfigError(ResoniaError):
    exit_code = 2


class SchemaError(ConfigError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class VersionError(ConfigError):
    pass


class NumericalError(ResoniaError):
    exit_code = 3


# potential
class NoWellFound(NumericalError):
    pass


class NoBoundary(NumericalError):
    pass


class DegenerateBoundary(NumericalError):
    pass


# eikonal
class GridTooCoarse(NumericalError):
    pass


class DidNotConverge(NumericalError):
    pass


class AmbiguousGamma(NumericalError):
    pass


class NoCausticFound(NumericalError):
    pass


# wkb
class PhaseLaplacianUnstable(NumericalError):
    pass


class CoverageGap(NumericalError):
    pass


# caustic
class ChartFitFailed(NumericalError):
    pass


class OutsideChart(NumericalError):
    pass


class InnerStripUnavailable(NumericalError):
    pass


class ContourFailure(NumericalError):
    pass


class BandViolation(NumericalError):
    pass


class DegenerateSamples(NumericalError):
    pass


# resonance
class ResolutionError(NumericalError):
    pass


class ScalingInsideIsland(NumericalError):
    pass


class NoIsolatedResonance(NumericalError):
    pass


# width
class SurfaceTooClose(NumericalError):
    pass


class DegenerateTransverseHessian(NumericalError):
    pass


class BadLadder(NumericalError):
    pass
