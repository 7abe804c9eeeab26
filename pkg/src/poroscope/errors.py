"""Exception hierarchy shared by all poroscope modules.

Each class carries the CLI exit code it maps to.
"""


class PoroscopeError(Exception):
    exit_code = 1


class InputError(PoroscopeError, ValueError):
    """Malformed or mismatched arguments (wrong dimension, bad indices)."""

    exit_code = 2


class DomainError(PoroscopeError, ValueError):
    """Parameter outside the mathematical domain of an operation."""

    exit_code = 2


class ParseError(InputError):
    exit_code = 2


class CompositionError(InputError):
    exit_code = 2


class ResolutionError(PoroscopeError):
    """Query scale too fine for the raster depth."""

    exit_code = 3


class ResourceError(PoroscopeError):
    exit_code = 4


class ConstructionError(PoroscopeError):
    """A randomized construction (net, cover) failed its audit within the cap."""

    exit_code = 4

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SamplingError(PoroscopeError):
    exit_code = 4


class SearchError(PoroscopeError):
    exit_code = 5


class VerificationError(PoroscopeError):
    exit_code = 5
