"""ULA geometry, steering vectors, and synthetic snapshot generation.

Angles theta are measured from the array axis, in radians, over [0, pi).
The spatial frequency is psi = 2*pi*(d/lambda)*cos(theta) and the steering
vector is v(psi)_n = exp(-j*n*psi).

Snapshot synthesis is deterministic given the scene seed.  Independent
substreams are derived with ``numpy.random.SeedSequence`` spawn keys so that
Monte-Carlo trials and retransmission passes can be generated in any order:
stream (0,) holds the target amplitudes, stream (1, m) the receiver noise of
retransmission pass m (pass 0 is the noise of the initial reception).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidScene

_AMPLITUDE_STREAM = 0
_NOISE_STREAM = 1


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with spacing given in wavelengths."""

    elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.elements < 2:
            raise ValueError("a ULA needs at least 2 elements")
        if not 0.0 < self.spacing_wavelengths <= 0.5:
            raise ValueError("spacing must be in (0, 0.5] wavelengths to avoid grating lobes")

    @property
    def psi_max(self) -> float:
        """Edge of the visible region in spatial frequency."""
        return 2.0 * np.pi * self.spacing_wavelengths


@dataclass(frozen=True)
class TargetScene:
    """Point targets plus noise level, snapshot count and RNG seed.

    ``thetas`` are radians in (0, pi); ``powers`` are linear. ``snr_db`` is
    the per-element ratio of the first target's power to the noise variance
    (``inf`` means noiseless).
    """

    thetas: tuple
    snr_db: float
    snapshots: int
    seed: int
    powers: tuple = None  # defaults to all-ones

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        object.__setattr__(self, "thetas", thetas)
        if self.powers is None:
            object.__setattr__(self, "powers", (1.0,) * len(thetas))
        else:
            object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if len(self.powers) != len(thetas):
            raise InvalidScene("powers and thetas must have equal length")
        if any(not 0.0 < t < np.pi for t in thetas):
            raise InvalidScene("target angles must lie strictly inside (0, pi)")
        if any(p < 0 for p in self.powers):
            raise InvalidScene("target powers must be nonnegative")
        for i in range(len(thetas)):
            for j in range(i + 1, len(thetas)):
                if abs(thetas[i] - thetas[j]) < 1e-9:
                    raise InvalidScene("target angles must be pairwise distinct")
        if self.snapshots < 1:
            raise InvalidScene("need at least one snapshot")

    @classmethod
    def from_degrees(cls, thetas_deg, snr_db, snapshots, seed, powers_db=None):
        thetas = tuple(np.deg2rad(t) for t in thetas_deg)
        powers = None
        if powers_db is not None:
            powers = tuple(10.0 ** (p / 10.0) for p in powers_db)
        return cls(thetas, snr_db, snapshots, seed, powers)

    @property
    def noise_power(self) -> float:
        """Noise variance sigma^2 implied by ``snr_db``."""
        if np.isinf(self.snr_db):
            return 0.0
        reference = self.powers[0] if self.powers else 1.0
        return reference / 10.0 ** (self.snr_db / 10.0)


def spatial_frequency(theta, geometry: ArrayGeometry):
    """Map arrival angle(s) to spatial frequency psi = 2*pi*(d/lambda)*cos(theta)."""
    return 2.0 * np.pi * geometry.spacing_wavelengths * np.cos(theta)


def steering_vector(psi: float, n: int) -> np.ndarray:
    """Steering vector [1, e^{-j psi}, ..., e^{-j(N-1) psi}]."""
    return np.exp(-1j * psi * np.arange(n))


def steering_matrix(psis, n: int) -> np.ndarray:
    """Stack of steering vectors, one row per entry of ``psis``: shape (len(psis), n)."""
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    return np.exp(-1j * np.outer(psis, np.arange(n)))


def _rng(seed: int, *spawn_key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


def _circular_gaussian(rng, shape, power):
    if power == 0.0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def clean_snapshots(scene: TargetScene, geometry: ArrayGeometry) -> np.ndarray:
    """Noise-free source term sum_k a_k[n] v(psi_k), shape (N, T).

    The amplitudes a_k are i.i.d. circular complex Gaussian with power P_k,
    uncorrelated across targets, drawn from the scene's amplitude stream.
    """
    n, t = geometry.elements, scene.snapshots
    if len(scene.thetas) >= n:
        raise InvalidScene("need fewer targets than array elements")
    rng = _rng(scene.seed, _AMPLITUDE_STREAM)
    out = np.zeros((n, t), dtype=complex)
    if not scene.thetas:
        return out
    psis = spatial_frequency(np.asarray(scene.thetas), geometry)
    vs = steering_matrix(psis, n)  # (L, n)
    amps = np.stack(
        [_circular_gaussian(rng, t, p) for p in scene.powers]
    )  # (L, t), fixed draw order: one block per target
    return vs.T @ amps


def pass_noise(scene: TargetScene, geometry: ArrayGeometry, pass_index: int = 0) -> np.ndarray:
    """Receiver noise of a given retransmission pass, shape (N, T).

    Pass 0 is the noise of the initial reception; each pass has its own
    independent substream so loops are reproducible regardless of evaluation
    order.
    """
    rng = _rng(scene.seed, _NOISE_STREAM, int(pass_index))
    return _circular_gaussian(rng, (geometry.elements, scene.snapshots), scene.noise_power)


def synthesize_snapshots(scene: TargetScene, geometry: ArrayGeometry) -> np.ndarray:
    """Received data r[n] = sum_k a_k[n] v(psi_k) + w[n], shape (N, T)."""
    return clean_snapshots(scene, geometry) + pass_noise(scene, geometry, 0)


def sample_autocorrelation(snapshots) -> np.ndarray:
    """Sample autocorrelation R = (1/T) sum_n r[n] r[n]^H."""
    snapshots = np.asarray(snapshots)
    if snapshots.ndim != 2 or snapshots.shape[1] < 1:
        raise ValueError("snapshots must be an N x T matrix with T >= 1")
    t = snapshots.shape[1]
    r = snapshots @ snapshots.conj().T / t
    # enforce exact Hermitian symmetry against rounding
    return 0.5 * (r + r.conj().T)
