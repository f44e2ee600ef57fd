"""Exception hierarchy.

Each module raises its own subclass so the CLI can map failures to a
distinct process exit code.
"""


class EbikecastError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class IngestError(EbikecastError, ValueError):
    exit_code = 3


class PrepError(EbikecastError, ValueError):
    exit_code = 4


class SeriesError(EbikecastError, ValueError):
    exit_code = 5


class DiagnosticsError(EbikecastError, ValueError):
    exit_code = 6


class ArimaError(EbikecastError, ValueError):
    exit_code = 7


class ForestError(EbikecastError, ValueError):
    exit_code = 8


class ImpactError(EbikecastError, ValueError):
    exit_code = 9


class PlotError(EbikecastError, ValueError):
    exit_code = 10
