"""Exception types shared across the library."""


class SpatialIIRError(Exception):
    """Base class for all library errors."""


class NotHermitian(SpatialIIRError):
    """Matrix failed the Hermitian symmetry tolerance."""


class NoConvergence(SpatialIIRError):
    """Eigenvalue iteration exceeded its iteration cap."""


class SingularMatrix(SpatialIIRError):
    """Matrix is singular (or numerically indefinite) for the requested solve."""


class InvalidScene(SpatialIIRError):
    """Target scene violates its invariants."""


class ZeroTuningScalar(SpatialIIRError):
    """Tuning scalar k must be nonzero."""


class PoleAtAngle(SpatialIIRError):
    """Transfer function evaluated at (or too close to) a pole.

    Carries the offending spatial frequency in ``psi`` when known.
    """

    def __init__(self, message, psi=None):
        super().__init__(message)
        self.psi = psi


class UnstableLoop(SpatialIIRError):
    """Retransmission loop output grew beyond the stability guard.

    ``sweep_theta`` carries the sweep angle (radians) when raised inside an
    angle sweep.
    """

    def __init__(self, message, sweep_theta=None):
        super().__init__(message)
        self.sweep_theta = sweep_theta


class UnstableExpansion(SpatialIIRError):
    """Power-series expansion of an inverse filter diverged."""


class NoHalfPowerCrossing(SpatialIIRError):
    """Pattern never drops 3 dB below its peak."""


class NoSidelobe(SpatialIIRError):
    """No local maximum exists outside the main lobe."""


class SingularCovariance(SpatialIIRError):
    """Sample covariance is singular; MVDR weights are undefined."""


class SubspaceSplitAmbiguous(SpatialIIRError):
    """Signal/noise eigenvalue gap too small to split subspaces."""


class RankDeficientSubarray(SpatialIIRError):
    """Subarray selection of the signal subspace lost rank."""


class CoarrayHole(SpatialIIRError):
    """Difference coarray is not contiguous (defensive; cannot happen for a
    valid nested geometry)."""


class SubarrayTooSmall(SpatialIIRError):
    """Reduced-dimension subarrays need at least two elements."""


class FewerPeaksThanTargets(SpatialIIRError):
    """Spectrum produced fewer usable peaks than requested targets."""


class LengthMismatch(SpatialIIRError):
    """Angle lists must have equal length."""
