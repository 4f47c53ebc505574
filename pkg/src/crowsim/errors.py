"""Exception hierarchy shared across the package.

Three branches matter to the CLI exit-code mapping: configuration problems
(exit 2), physics-domain failures such as an out-of-band wavelength (exit 3),
and fit failures (exit 4).
"""


class CrowSimError(Exception):
    """Base class for all package errors."""


class ConfigError(CrowSimError):
    """Invalid or incomplete scenario configuration."""


class PhysicsError(CrowSimError):
    """A physically meaningful operation could not be performed."""


class FitError(CrowSimError):
    """A statistical fit could not be carried out or did not converge."""


# --- physics ---------------------------------------------------------------

class OutOfBandError(PhysicsError):
    """Optical frequency falls outside the transmission band."""


class NoFeasibleFitError(PhysicsError):
    """Band calibration cannot place the signal wavelength in-band."""


class NonPhysicalWidthError(PhysicsError):
    """Measured peak is narrower than the detection resolution floor."""


class ZeroMeanError(PhysicsError):
    """Photon-number statistics requested for a zero-mean channel."""


class InfeasibleG2Error(PhysicsError):
    """Requested cross-correlation exceeds what the source model allows."""


class NonIntegerShiftError(PhysicsError):
    """Interferometer arm delay is not an integer number of time slots."""


class InvalidVisibilityError(PhysicsError):
    """Fringe visibility outside [0, 1]."""


class ZeroEnergyError(PhysicsError):
    """Pulse envelope carries no energy."""


class GridTooCoarseError(PhysicsError):
    """Time grid cannot resolve the requested pulse width."""


class GridTooSmallError(PhysicsError):
    """Time grid clips a non-negligible fraction of the pulse energy."""


class GridMismatchError(PhysicsError):
    """Transfer-function samples do not match the pulse's frequency grid."""


class UnsortedInputError(PhysicsError):
    """Event times passed to the coincidence counter are not sorted."""


# --- fits ------------------------------------------------------------------

class NoPeakError(FitError):
    """No interior count maximum found in the fit window."""


class SingularFitError(FitError):
    """Degenerate normal equations / covariance in a least-squares fit."""


class EmptySidePeaksError(FitError):
    """No accidental-coincidence counts available for normalization."""


class InsufficientSpanError(FitError):
    """Fringe settings do not span enough of a period to fit."""


class DegenerateFitError(FitError):
    """Fringe fit collapsed (e.g. zero modulation and free phase)."""


class MultiPeakWarning(UserWarning):
    """Envelope is not unimodal; width reported for the widest region."""
