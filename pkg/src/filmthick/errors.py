"""Exception hierarchy.

Every error raised by this package derives from FilmthickError and carries the
process exit code the CLI maps it to: 2 for configuration problems, 3 for I/O
and file-format problems, 4 for numeric failures.
"""

from __future__ import annotations


class FilmthickError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(FilmthickError):
    """Invalid parameters, options, or incompatible settings."""

    exit_code = 2


class InvalidParameterError(ConfigurationError):
    """A physical or numerical parameter is outside its valid domain."""


class ArchitectureMismatchError(ConfigurationError):
    """A checkpoint does not match the requested network architecture."""


class DataFormatError(FilmthickError):
    """A file could not be read or does not match its declared format."""

    exit_code = 3


class GridMismatchError(DataFormatError):
    """Spectral data does not align with the expected wavelength grid."""


class NumericFailureError(FilmthickError):
    """A computation produced non-finite values or diverged."""

    exit_code = 4


class TrainingDivergedError(NumericFailureError):
    """Loss or parameters became non-finite during optimization."""
