"""Exception types shared across the package.

Everything derives from ValueError so callers can catch domain failures
with a single handler (the CLI maps them all to exit code 1).
"""


class InvalidGridError(ValueError):
    """A wavelength grid spec is degenerate (non-positive step, zero count)."""


class GridMismatchError(ValueError):
    """Two spectral curves were combined without sharing a wavelength grid."""


class SceneCoverageError(ValueError):
    """A scene leaves at least one pixel without a patch."""


class UnknownSceneError(ValueError):
    """Requested builtin scene name does not exist."""


class ContainmentError(ValueError):
    """Shutter window cannot be contained inside the flash window."""


class PpmFormatError(ValueError):
    """A PPM/PGM file violates the supported subset of the format."""


class ConfigError(ValueError):
    """A config file failed validation; message names the offending field."""
