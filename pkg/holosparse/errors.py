"""
Exception hierarchy for holosparse.

Parameter problems also subclass ValueError so callers that only know the
builtin contract can still catch them.
"""


class HoloSparseError(Exception):
    """Base class for every error raised by the library."""


class InvalidParameterError(HoloSparseError, ValueError):
    """An argument is outside its documented domain or dimensions disagree."""


class EvanescentWaveError(HoloSparseError, ValueError):
    """A wavenumber pair lies outside the propagating disk k_x² + k_y² ≤ k²."""


class OutOfValidityError(HoloSparseError, ValueError):
    """An empirical relation was evaluated outside its validity range."""


class DegenerateProfileError(HoloSparseError):
    """A scattering profile puts no power on the propagating hemisphere."""


class DegenerateSignalError(HoloSparseError):
    """The noiseless received signal has zero energy, so no SNR can be set."""


class ConfigError(HoloSparseError, ValueError):
    """A configuration value is missing, unknown or out of range."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key
