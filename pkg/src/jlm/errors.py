"""Exception types raised across the package."""


class JLMError(Exception):
    """Base class for all package errors."""


class NotEigenoperator(JLMError, ValueError):
    """The operator is not an eigenoperator of the free Liouvillian."""


class DegenerateDetunings(JLMError, ValueError):
    """Two cumulative detunings coincide, leaving a pole in the weight."""


class ZeroDetuning(DegenerateDetunings):
    """A one-photon detuning vanishes where the dispersive weight needs it non-zero."""


class UnknownState(JLMError, ValueError):
    """A bare-state label could not be parsed or lies outside the truncation."""


class NoSolution(JLMError):
    """A resonance condition cannot be solved for the requested pair of states."""


class LeakageExceeded(JLMError):
    """Population reached the top Fock levels beyond the configured tolerance."""


class NoPeak(JLMError):
    """A signal has no identifiable spectral peak."""


class ConfigError(JLMError, ValueError):
    """A run configuration is malformed or out of range."""
