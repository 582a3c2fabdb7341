"""Direction-of-arrival estimators.

The feedback-MVDR sweep (algorithm 1) and the inverse-filter variant
(algorithm 2) are the methods of interest; MUSIC, ESPRIT, diagonally loaded
(robust) MVDR, nested-array coarray MVDR and reduced-dimension subarray MVDR
serve as baselines.  All spectrum methods share the same theta grid
convention: uniform over [0, pi), power normalized to a unit maximum.
"""

from dataclasses import dataclass

import numpy as np

from .arrays import (
    ArrayGeometry,
    TargetScene,
    clean_snapshots,
    pass_noise,
    sample_autocorrelation,
    spatial_frequency,
    steering_matrix,
    synthesize_snapshots,
)
from .beamformers import LOOP_GUARD_FACTOR
from .errors import (
    CoarrayHole,
    FewerPeaksThanTargets,
    InvalidScene,
    LengthMismatch,
    RankDeficientSubarray,
    SingularCovariance,
    SingularMatrix,
    SubarrayTooSmall,
    SubspaceSplitAmbiguous,
    UnstableExpansion,
    UnstableLoop,
)
from .linalg import hermitian_eig, hermitian_solve

DEFAULT_GRID_POINTS = 360
EIG_GAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PseudoSpectrum:
    """Angle-indexed output power, normalized to max 1 (when nonzero)."""

    theta_grid: np.ndarray
    power: np.ndarray


@dataclass(frozen=True)
class EstimationResult:
    """Estimated angles (radians, ascending) plus their RMSE in degrees."""

    estimated_thetas: tuple
    rmse_deg: float
    retransmissions: int


@dataclass(frozen=True)
class PeakPick:
    """Peak angles (radians, ascending) and whether enough true local maxima
    existed; ``found_all`` is False when a boundary fallback was used."""

    angles: tuple
    found_all: bool


def theta_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform sweep grid over [0, pi)."""
    return np.linspace(0.0, np.pi, points, endpoint=False)


def _as_grid(grid) -> np.ndarray:
    if np.ndim(grid) == 0:
        return theta_grid(int(grid))
    return np.asarray(grid, dtype=float)


def _normalize(power: np.ndarray) -> np.ndarray:
    top = power.max()
    return power / top if top > 0 else power


def mvdr_weights(r, c) -> np.ndarray:
    """Minimum-variance distortionless weights R^-1 c / (c^H R^-1 c)."""
    c = np.asarray(c, dtype=complex)
    if not np.any(c):
        raise ValueError("constraint vector must be nonzero")
    try:
        sol = hermitian_solve(r, c)
    except SingularMatrix as exc:
        raise SingularCovariance(str(exc)) from exc
    return sol / (c.conj() @ sol)


def _batched_mvdr(r_stack, c_stack):
    """Eq.-(12) weights for stacks of covariances/constraints, shape (G, N)."""
    try:
        sol = np.linalg.solve(r_stack, c_stack[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc
    quad = np.einsum("gn,gn->g", c_stack.conj(), sol)
    if not np.all(np.isfinite(sol)) or np.any(np.abs(quad) == 0):
        raise SingularCovariance("sample covariance not invertible along the sweep")
    return sol / quad[:, None]


def feedback_mvdr_alg1(scene: TargetScene, geometry: ArrayGeometry,
                       retransmissions: int, grid=DEFAULT_GRID_POINTS) -> PseudoSpectrum:
    """Feedback-MVDR sweep with the distortionless constraint c = v(psi).

    For every sweep angle the MVDR weights are formed from the initial
    reception, the transmit weights are set to ``alpha = c``, and the scene
    is re-illuminated for ``retransmissions`` passes (fresh receiver noise
    per pass, shared across sweep angles).  Energy returned through a true
    reflector grows by roughly the array gain per pass, so the output power
    peaks at target angles even deep below the noise floor.
    """
    thetas = _as_grid(grid)
    n, t = geometry.elements, scene.snapshots
    source = clean_snapshots(scene, geometry)
    c_stack = steering_matrix(spatial_frequency(thetas, geometry), n)   # (G, N)
    g = len(thetas)
    r = np.broadcast_to(source + pass_noise(scene, geometry, 0), (g, n, t)).copy()
    cov = np.einsum("gnt,gmt->gnm", r, r.conj()) / t
    beta = _batched_mvdr(cov, c_stack)
    psis = spatial_frequency(np.asarray(scene.thetas), geometry)
    vs = steering_matrix(psis, n)                                       # (L, N)
    y = np.einsum("gn,gnt->gt", beta.conj(), r)
    guard = LOOP_GUARD_FACTOR * max(np.max(np.abs(y)), np.finfo(float).tiny)
    for m in range(retransmissions):
        tx = np.einsum("gn,kn->gk", c_stack.conj(), vs)                 # alpha^H v_k
        fb = np.einsum("gk,kn,gt->gnt", tx, vs, y)
        r = source[None, :, :] + fb + pass_noise(scene, geometry, m + 1)[None, :, :]
        y = np.einsum("gn,gnt->gt", beta.conj(), r)
        peak = np.max(np.abs(y), axis=1)
        if np.any(peak > guard):
            bad = thetas[int(np.argmax(peak))]
            raise UnstableLoop(f"retransmission diverged at pass {m + 1}",
                               sweep_theta=float(bad))
    power = np.mean(np.abs(y) ** 2, axis=1)
    return PseudoSpectrum(thetas, _normalize(power))


def inverse_filter_taps(beta, n_taps: int, limit: float = LOOP_GUARD_FACTOR) -> np.ndarray:
    """First ``n_taps`` power-series coefficients of 1/B(z) by long division,
    where B(z) = sum_n conj(beta_n) z^-n is the receive filter."""
    b = np.asarray(beta, dtype=complex).conj()
    if b[0] == 0:
        raise ValueError("beta_0 must be nonzero for the expansion")
    taps = np.zeros(n_taps, dtype=complex)
    taps[0] = 1.0 / b[0]
    for m in range(1, n_taps):
        hi = min(m, len(b) - 1)
        acc = np.dot(b[1:hi + 1], taps[m - hi:m][::-1])
        taps[m] = -acc / b[0]
        if np.abs(taps[m]) > limit:
            raise UnstableExpansion(
                f"expansion coefficient {m} exceeded {limit:.0e} "
                f"(receive filter has roots outside the stable region)")
    return taps


def feedback_mvdr_alg2(scene: TargetScene, geometry: ArrayGeometry,
                       retransmissions: int, grid=DEFAULT_GRID_POINTS) -> PseudoSpectrum:
    """Feedback MVDR with the first-element constraint c = e0.

    The receive filter beta places nulls on the targets; the transmit
    weights are the first N taps of the impulse response of 1/B(z), so the
    transmit pattern peaks where beta has nulls.  The covariance (and with
    it beta and alpha) is re-estimated each pass from all snapshots received
    so far; the final spectrum is |alpha(psi)|^2 on the sweep grid.
    """
    thetas = _as_grid(grid)
    n = geometry.elements
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    source = clean_snapshots(scene, geometry)
    r = source + pass_noise(scene, geometry, 0)
    psis = spatial_frequency(np.asarray(scene.thetas), geometry)
    vs = steering_matrix(psis, n)
    history = [r]
    taps = None
    guard_ref = None
    for m in range(retransmissions + 1):
        cov = sample_autocorrelation(np.concatenate(history, axis=1))
        beta = mvdr_weights(cov, e0)
        taps = inverse_filter_taps(beta, n)
        if m == retransmissions:
            break
        alpha = taps.conj()
        y = beta.conj() @ r
        top = np.max(np.abs(y))
        if guard_ref is None:
            guard_ref = max(top, np.finfo(float).tiny)
        elif top > LOOP_GUARD_FACTOR * guard_ref:
            raise UnstableLoop(f"retransmission diverged at pass {m}")
        tx = vs @ alpha.conj()
        fb = vs.T @ (tx[:, None] * y[None, :])
        r = source + fb + pass_noise(scene, geometry, m + 1)
        history.append(r)
    # alpha(psi) = sum_m taps_m e^{-j m psi}, evaluated on the sweep grid
    basis = steering_matrix(spatial_frequency(thetas, geometry), n)
    power = np.abs(basis @ taps) ** 2
    return PseudoSpectrum(thetas, _normalize(power))


def music(r, n_targets: int, grid=DEFAULT_GRID_POINTS,
          geometry: ArrayGeometry | None = None) -> PseudoSpectrum:
    """MUSIC pseudo-spectrum 1 / ||E_n^H v(psi)||^2.

    An isotropic covariance (no usable eigenvalue spread) yields a flat
    spectrum; a genuinely ambiguous partial split raises
    :class:`SubspaceSplitAmbiguous`.
    """
    r = np.asarray(r, dtype=complex)
    n = r.shape[0]
    if not 0 < n_targets < n:
        raise ValueError("need 0 < n_targets < n_elements")
    geometry = geometry or ArrayGeometry(n)
    eig = hermitian_eig(r)
    lam = eig.eigenvalues
    scale = max(abs(lam[0]), 1.0)
    spread = lam[0] - lam[-1]
    gap = lam[n_targets - 1] - lam[n_targets]
    if gap < EIG_GAP_TOL * scale and spread > EIG_GAP_TOL * scale:
        raise SubspaceSplitAmbiguous(
            f"eigenvalue gap {gap:.3e} between indices {n_targets - 1} and "
            f"{n_targets} is too small")
    noise_basis = eig.eigenvectors[:, n_targets:]
    thetas = _as_grid(grid)
    v = steering_matrix(spatial_frequency(thetas, geometry), n)
    denom = np.sum(np.abs(v.conj() @ noise_basis) ** 2, axis=1)
    power = 1.0 / np.maximum(denom, np.finfo(float).tiny)
    return PseudoSpectrum(thetas, _normalize(power))


def esprit(r, n_targets: int, geometry: ArrayGeometry | None = None) -> np.ndarray:
    """ESPRIT angle estimates from the shift invariance of the signal subspace.

    Returns ``n_targets`` angles in radians, ascending.  Spatial frequencies
    outside the visible region are clamped to the arccos domain boundary.
    """
    r = np.asarray(r, dtype=complex)
    n = r.shape[0]
    if not 0 < n_targets < n:
        raise ValueError("need 0 < n_targets < n_elements")
    geometry = geometry or ArrayGeometry(n)
    eig = hermitian_eig(r)
    signal = eig.eigenvectors[:, :n_targets]
    upper, lower = signal[:-1, :], signal[1:, :]
    psi_op, _, rank, _ = np.linalg.lstsq(upper, lower, rcond=None)
    if rank < n_targets:
        raise RankDeficientSubarray(
            f"signal subspace subarray rank {rank} < {n_targets}")
    rotations = np.linalg.eigvals(psi_op)
    psi_hat = -np.angle(rotations)
    cosines = np.clip(psi_hat / geometry.psi_max, -1.0, 1.0)
    return np.sort(np.arccos(cosines))


def robust_mvdr(r, grid=DEFAULT_GRID_POINTS, lambda_r: float = 0.05,
                geometry: ArrayGeometry | None = None) -> PseudoSpectrum:
    """Diagonally loaded Capon sweep: P(theta) = 1 / (c^H (R + lambda_r I)^-1 c)."""
    if lambda_r < 0:
        raise ValueError("diagonal loading must be nonnegative")
    r = np.asarray(r, dtype=complex)
    n = r.shape[0]
    geometry = geometry or ArrayGeometry(n)
    loaded = r + lambda_r * np.eye(n)
    eig = hermitian_eig(loaded)
    if eig.eigenvalues[-1] <= 0:
        raise SingularCovariance("loaded covariance is not positive definite")
    thetas = _as_grid(grid)
    v = steering_matrix(spatial_frequency(thetas, geometry), n)
    proj = v.conj() @ eig.eigenvectors                    # (G, N)
    quad = np.einsum("gn,n,gn->g", proj, 1.0 / eig.eigenvalues, proj.conj()).real
    power = 1.0 / np.maximum(quad, np.finfo(float).tiny)
    return PseudoSpectrum(thetas, _normalize(power))


# ---------------------------------------------------------------------------
# nested-array coarray MVDR


def nested_element_positions(n1: int, n2: int) -> np.ndarray:
    """Element positions (units of d) of a two-level nested array.

    Level 1 occupies {0, 1, ..., n1-1}; level 2 sits at {m (n1+1) - 1} for
    m = 1..n2, i.e. spacing d2 = (n1+1) d.  The difference set of these
    positions covers every lag in [-(n2(n1+1)-1), n2(n1+1)-1].
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("both nested levels need at least one element")
    level1 = np.arange(n1)
    level2 = (np.arange(1, n2 + 1)) * (n1 + 1) - 1
    return np.unique(np.concatenate([level1, level2]))


def coarray_lags(positions) -> np.ndarray:
    """Sorted unique pairwise differences of element positions."""
    positions = np.asarray(positions)
    return np.unique((positions[:, None] - positions[None, :]).ravel())


def _nested_snapshots(scene: TargetScene, positions, spacing: float):
    """Synthesize snapshots on arbitrary integer positions (units of d)."""
    if len(scene.thetas) >= len(positions):
        raise InvalidScene("need fewer targets than array elements")
    psis = 2.0 * np.pi * spacing * np.cos(np.asarray(scene.thetas))
    vs = np.exp(-1j * np.outer(psis, positions))          # (L, n)
    rng = np.random.default_rng(np.random.SeedSequence(scene.seed, spawn_key=(0,)))
    t = scene.snapshots
    amps = []
    for p in scene.powers:
        block = rng.standard_normal(t) + 1j * rng.standard_normal(t)
        amps.append(np.sqrt(p / 2.0) * block)
    amps = np.stack(amps) if amps else np.zeros((0, t))
    rng_noise = np.random.default_rng(np.random.SeedSequence(scene.seed, spawn_key=(1, 0)))
    sigma2 = scene.noise_power
    noise = np.sqrt(sigma2 / 2.0) * (
        rng_noise.standard_normal((len(positions), t))
        + 1j * rng_noise.standard_normal((len(positions), t)))
    return vs.T @ amps + noise


def nested_mvdr(scene: TargetScene, grid=DEFAULT_GRID_POINTS, n1: int = 4,
                n2: int = 4, spacing: float = 0.5) -> PseudoSpectrum:
    """Coarray MVDR on a two-level nested array.

    The sample covariance entries are averaged per coarray lag, arranged
    into overlapping virtual-ULA windows (spatial smoothing), and the
    resulting full-rank covariance drives a standard MVDR sweep on the
    virtual aperture.
    """
    positions = nested_element_positions(n1, n2)
    data = _nested_snapshots(scene, positions, spacing)
    cov = sample_autocorrelation(data)
    k_max = n2 * (n1 + 1) - 1
    lags = positions[:, None] - positions[None, :]
    sums = np.zeros(2 * k_max + 1, dtype=complex)
    counts = np.zeros(2 * k_max + 1)
    for i in range(len(positions)):
        for j in range(len(positions)):
            lag = int(lags[i, j])
            if -k_max <= lag <= k_max:
                sums[lag + k_max] += cov[i, j]
                counts[lag + k_max] += 1
    if np.any(counts == 0):
        raise CoarrayHole("difference coarray has a hole")  # defensive
    z = sums / counts
    m = k_max + 1
    smoothed = np.zeros((m, m), dtype=complex)
    for i in range(m):
        window = z[i:i + m]                                # lags i-k_max .. i
        smoothed += np.outer(window, window.conj())
    smoothed /= m
    smoothed = 0.5 * (smoothed + smoothed.conj().T)        # scrub rounding skew
    thetas = _as_grid(grid)
    psis = 2.0 * np.pi * spacing * np.cos(thetas)
    v = np.exp(-1j * np.outer(psis, np.arange(m)))
    eig = hermitian_eig(smoothed)
    lam = eig.eigenvalues
    cutoff = max(lam[0], 0.0) * 1e-12
    inv_lam = np.where(lam > cutoff, 1.0 / np.maximum(lam, np.finfo(float).tiny), 0.0)
    proj = v.conj() @ eig.eigenvectors
    quad = np.einsum("gn,n,gn->g", proj, inv_lam, proj.conj()).real
    power = 1.0 / np.maximum(quad, np.finfo(float).tiny)
    return PseudoSpectrum(thetas, _normalize(power))


def reduced_dim_mvdr(scene: TargetScene, geometry: ArrayGeometry,
                     subarray_size: int, grid=DEFAULT_GRID_POINTS) -> PseudoSpectrum:
    """Serial subarray MVDR: Capon sweep per contiguous subarray, combined
    as the product of the per-subarray spectra."""
    if subarray_size < 2:
        raise SubarrayTooSmall("subarrays need at least 2 elements")
    n = geometry.elements
    if n % subarray_size:
        raise ValueError("element count must be divisible by the subarray size")
    data = synthesize_snapshots(scene, geometry)
    thetas = _as_grid(grid)
    v = steering_matrix(spatial_frequency(thetas, geometry), subarray_size)
    log_power = np.zeros(len(thetas))
    for s in range(n // subarray_size):
        block = data[s * subarray_size:(s + 1) * subarray_size]
        cov = sample_autocorrelation(block)
        eig = hermitian_eig(cov)
        if eig.eigenvalues[-1] <= 0:
            raise SingularCovariance(f"subarray {s} covariance is singular")
        proj = v.conj() @ eig.eigenvectors
        quad = np.einsum("gn,n,gn->g", proj, 1.0 / eig.eigenvalues, proj.conj()).real
        log_power -= np.log(np.maximum(quad, np.finfo(float).tiny))
    power = np.exp(log_power - log_power.max())
    return PseudoSpectrum(thetas, _normalize(power))


# ---------------------------------------------------------------------------
# peak picking and scoring


def peaks_to_angles(spectrum: PseudoSpectrum, n_targets: int,
                    min_separation: float = 0.0) -> PeakPick:
    """Locations of the ``n_targets`` strongest local maxima, refined by
    3-point parabolic interpolation and sorted ascending.

    ``min_separation`` (radians) suppresses secondary maxima inside an
    already-picked lobe.  When the interior maxima run out, boundary maxima
    are used and the result is flagged via ``found_all=False``.
    """
    if n_targets < 1:
        raise ValueError("need at least one target")
    p = spectrum.power
    g = spectrum.theta_grid
    interior = np.nonzero((p[1:-1] >= p[:-2]) & (p[1:-1] >= p[2:]))[0] + 1
    candidates = sorted(interior, key=lambda i: -p[i])
    fallback = sorted((i for i in (0, len(p) - 1)), key=lambda i: -p[i])
    step = g[1] - g[0] if len(g) > 1 else 0.0
    chosen: list[int] = []
    used_fallback = False
    for pool in (candidates, fallback):
        for i in pool:
            if len(chosen) == n_targets:
                break
            if all(abs(g[i] - g[j]) >= min_separation for j in chosen):
                chosen.append(i)
                used_fallback = used_fallback or (pool is fallback)
    if not chosen:
        raise FewerPeaksThanTargets("spectrum has no usable maxima")
    while len(chosen) < n_targets:   # degenerate: repeat the strongest
        chosen.append(chosen[0])
        used_fallback = True
    angles = []
    for i in chosen:
        if 0 < i < len(p) - 1:
            curv = p[i - 1] - 2.0 * p[i] + p[i + 1]
            offset = 0.5 * (p[i - 1] - p[i + 1]) / curv if curv != 0 else 0.0
            angles.append(g[i] + offset * step)
        else:
            angles.append(g[i])
    return PeakPick(tuple(sorted(angles)), not used_fallback)


def rmse(true_thetas, estimated_thetas) -> float:
    """Root-mean-square angle error in degrees, pairing both lists after
    sorting ascending."""
    true_thetas = np.sort(np.asarray(true_thetas, dtype=float))
    estimated_thetas = np.sort(np.asarray(estimated_thetas, dtype=float))
    if true_thetas.shape != estimated_thetas.shape:
        raise LengthMismatch(
            f"{true_thetas.size} true angles vs {estimated_thetas.size} estimates")
    err = np.rad2deg(true_thetas - estimated_thetas)
    return float(np.sqrt(np.mean(err**2)))
