"""Exception hierarchy.

Every domain error carries a stable class name; the CLI prints that name on
stderr and exits with status 1, or 2 for ConfigError (a bad invocation).
"""


class AskeyLatticeError(Exception):
    """Base class for all domain errors raised by the package."""


class ParameterOutOfRange(AskeyLatticeError):
    pass


class TruncationFailure(AskeyLatticeError):
    pass


class LatticeRangeError(AskeyLatticeError):
    """A site or mode index lies outside the (truncated) lattice."""


class ModeCapExceeded(AskeyLatticeError):
    pass


class ConvergenceFailure(AskeyLatticeError):
    pass


class DegenerateFermiLevel(AskeyLatticeError):
    pass


class OutOfBand(AskeyLatticeError):
    pass


class DiagonalNotSupported(AskeyLatticeError):
    pass


class CDUnavailable(AskeyLatticeError):
    pass


class InvalidDistribution(AskeyLatticeError):
    pass


class InvalidExcitationSet(AskeyLatticeError):
    pass


class SectorTooLarge(AskeyLatticeError):
    pass


class ConfigError(AskeyLatticeError):
    """Malformed job configuration (CLI flags or JSON)."""
