"""Exception hierarchy shared across the package."""


class QWCError(Exception):
    """Base class for all errors raised by qwc."""


class ConfigurationError(QWCError, ValueError):
    """A parameter or configuration record violates a stated invariant."""


class TruncationError(QWCError):
    """The grid does not hold enough of a waveform's norm."""


class BoundaryError(QWCError, ValueError):
    """Chirp boundary constants put erf^-1 outside its domain."""


class BranchError(QWCError):
    """Closed-form inversion hit a non-monotone branch."""


class ResolutionError(QWCError):
    """Too much spectral power near the Nyquist edge of the k-grid."""


class SimulationInvalidError(QWCError):
    """A propagation run breached unitarity or resolution limits."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class StateError(QWCError, ValueError):
    """Photon-number coefficients do not describe a valid state."""


class FitError(QWCError):
    """Not enough usable points for a least-squares fit."""


class MaterialError(QWCError, ValueError):
    """Refractive-index model evaluated outside its validity or failed to converge."""
