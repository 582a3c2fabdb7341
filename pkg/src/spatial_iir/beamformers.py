"""Beamformer responses, information-optimal weights, and the
retransmission (spatial feedback) loop.

Three response families are implemented:

* plain weight-and-sum ("FIR"):        H(psi) = beta^H v(psi)
* single-antenna feedback:             H(psi) = g B / (1 - g B), B = beta^H v
* array feedback (this library's core) H(psi) = g B / (1 - g B A), A = alpha^H v

The feedback denominators put poles into the spatial response, which is what
yields the vanishing beamwidth and the sidelobe decay studied in
:mod:`spatial_iir.patterns`.
"""

from dataclasses import dataclass

import numpy as np

from .arrays import (
    ArrayGeometry,
    TargetScene,
    clean_snapshots,
    pass_noise,
    spatial_frequency,
    steering_matrix,
    steering_vector,
)
from .errors import PoleAtAngle, UnstableLoop, ZeroTuningScalar

POLE_TOL = 1e-12
LOOP_GUARD_FACTOR = 1e6


@dataclass(frozen=True, eq=False)
class BeamformerWeights:
    """Receive weights ``beta``, transmit (feedback) weights ``alpha`` (None
    for a feedback-free beamformer), tuning scalar ``k``, true received gain
    ``g`` and the gain ``g_hat`` assumed when the weights were formed."""

    beta: np.ndarray
    alpha: np.ndarray | None = None
    k: complex = 1.0
    g: float = 1.0
    g_hat: float = 1.0

    @property
    def gain_mismatch(self) -> float:
        """r = g / g_hat."""
        return self.g / self.g_hat


def optimal_weights(psi: float, n: int, k: complex = 1.0,
                    g_hat: float | None = None, g: float | None = None) -> BeamformerWeights:
    """Information-maximal feedback weights for a single target at ``psi``.

    ``beta = k v(psi)/N`` and ``alpha = v(psi)/(k N)``; with ``g_hat`` given,
    the gain-mismatch form ``beta = v(psi)/(g_hat N)`` is used instead.  The
    product ``beta^H v(psi) * alpha^H v(psi)`` equals 1 exactly, so the loop
    has a pole at the target whenever ``g == g_hat``.
    """
    if k == 0:
        raise ZeroTuningScalar("tuning scalar k must be nonzero")
    if n < 2:
        raise ValueError("need at least 2 elements")
    v = steering_vector(psi, n)
    if g_hat is None:
        beta = k * v / n
        g_hat_eff = 1.0
    else:
        beta = v / (g_hat * n)
        g_hat_eff = float(g_hat)
    alpha = v / (k * n)
    g_eff = g_hat_eff if g is None else float(g)
    return BeamformerWeights(beta=beta, alpha=alpha, k=k, g=g_eff, g_hat=g_hat_eff)


def fir_response(beta, psi):
    """Conventional response beta^H v(psi); ``psi`` may be scalar or array."""
    beta = np.asarray(beta)
    v = steering_matrix(psi, beta.shape[0])
    out = v @ beta.conj()
    return out[0] if np.ndim(psi) == 0 else out


def single_feedback_response(beta, psi, g: float = 1.0):
    """Single-transmit-antenna feedback response g B / (1 - g B).

    Raises :class:`PoleAtAngle` when the denominator magnitude falls below
    the pole tolerance (unit loop gain).
    """
    b = g * fir_response(beta, psi)
    den = 1.0 - b
    if np.min(np.abs(den)) <= POLE_TOL:
        raise PoleAtAngle("unit loop gain", psi=psi)
    return b / den


def array_feedback_response(weights: BeamformerWeights, psi):
    """Array feedback response g B / (1 - g B A) at arrival ``psi``,
    with B = beta^H v(psi) and A = alpha^H v(psi)."""
    if weights.alpha is None:
        return weights.g * fir_response(weights.beta, psi)
    b = weights.g * fir_response(weights.beta, psi)
    a = fir_response(weights.alpha, psi)
    den = 1.0 - b * a
    if np.min(np.abs(den)) <= POLE_TOL:
        raise PoleAtAngle("unit loop gain", psi=psi)
    return b / den


def loop_gain(weights: BeamformerWeights, psi):
    """Loop gain g * beta^H v(psi) * alpha^H v(psi) governing stability."""
    if weights.alpha is None:
        return 0.0 if np.ndim(psi) == 0 else np.zeros(np.shape(psi), dtype=complex)
    return (weights.g * fir_response(weights.beta, psi)
            * fir_response(weights.alpha, psi))


def simulate_retransmission_loop(scene: TargetScene, geometry: ArrayGeometry,
                                 weights: BeamformerWeights, n_passes: int):
    """Run the closed retransmission loop for ``n_passes`` retransmissions.

    Pass update, with S the clean source term and fresh noise each pass::

        r(0)   = S + w(0)
        y(m)   = g * beta^H r(m)
        r(m+1) = S + sum_k (alpha^H v_k) v_k y(m) + w(m+1)

    Each target reflects the transmitted beam with unit reflection gain.
    Returns ``(y, snapshots)``: the final output samples (T,) and the final
    received matrix (N, T).  With no feedback weights the loop reduces to the
    plain beamformer output.

    Raises
    ------
    UnstableLoop
        If any pass output magnitude exceeds 1e6 times the pass-0 magnitude
        (loop gain >= 1 away from the intended pole).
    """
    if n_passes < 0:
        raise ValueError("retransmission count must be >= 0")
    source = clean_snapshots(scene, geometry)
    r = source + pass_noise(scene, geometry, 0)
    psis = spatial_frequency(np.asarray(scene.thetas), geometry)
    vs = steering_matrix(psis, geometry.elements)          # (L, N)
    tx_gains = None
    if weights.alpha is not None and len(scene.thetas):
        tx_gains = vs @ weights.alpha.conj()               # alpha^H v_k per target
    y = weights.g * (weights.beta.conj() @ r)
    guard = LOOP_GUARD_FACTOR * max(np.max(np.abs(y)), np.finfo(float).tiny)
    for m in range(n_passes):
        if tx_gains is None:
            fb = 0.0
        else:
            fb = vs.T @ (tx_gains[:, None] * y[None, :])   # sum_k (alpha^H v_k) v_k y
        r = source + fb + pass_noise(scene, geometry, m + 1)
        y = weights.g * (weights.beta.conj() @ r)
        if np.max(np.abs(y)) > guard:
            raise UnstableLoop(f"output exceeded {LOOP_GUARD_FACTOR:.0e} x the "
                               f"no-feedback magnitude at pass {m + 1}")
    return y, r


# ---------------------------------------------------------------------------
# transfer function and Fisher information


@dataclass(frozen=True)
class FimResult:
    """2x2 Fisher information matrix over (psi, phi), real and symmetric."""

    matrix: np.ndarray

    @property
    def j_psipsi(self) -> float:
        return float(self.matrix[0, 0])

    @property
    def j_psiphi(self) -> float:
        return float(self.matrix[0, 1])

    @property
    def j_phiphi(self) -> float:
        return float(self.matrix[1, 1])


def _phase_diag(n: int) -> np.ndarray:
    # d v(psi) / d psi = A v(psi) with A = diag(0, -j, ..., -j(N-1))
    return -1j * np.arange(n)


def transfer_value(weights: BeamformerWeights, psi: float, phi: float = 0.0,
                   source: complex = 1.0) -> complex:
    """Closed-loop transfer value Y = H(psi, phi) * source with the range
    phase term e^{-j phi} in the loop."""
    n = weights.beta.shape[0]
    v = steering_vector(psi, n)
    b = weights.beta.conj() @ v
    a = 0.0 if weights.alpha is None else weights.alpha.conj() @ v
    ph = np.exp(-1j * phi)
    den = 1.0 - b * a * ph
    if abs(den) <= POLE_TOL:
        raise PoleAtAngle("pole in transfer function", psi=psi)
    return b * ph / den * source


def transfer_derivatives(weights: BeamformerWeights, psi: float, phi: float = 0.0,
                         source: complex = 1.0):
    """Closed-form derivatives (dY/dpsi, dY/dphi) of the loop transfer.

    With B = beta^H v, A = alpha^H v, p = e^{-j phi}, D = 1 - B A p and
    primes denoting the A-matrix derivative (beta^H A v, alpha^H A v)::

        dY/dpsi = p (B' + B^2 A' p) / D^2 * source
        dY/dphi = -j B p / D^2 * source
    """
    n = weights.beta.shape[0]
    v = steering_vector(psi, n)
    dv = _phase_diag(n) * v
    b = weights.beta.conj() @ v
    db = weights.beta.conj() @ dv
    if weights.alpha is None:
        a, da = 0.0, 0.0
    else:
        a = weights.alpha.conj() @ v
        da = weights.alpha.conj() @ dv
    ph = np.exp(-1j * phi)
    den = 1.0 - b * a * ph
    if abs(den) <= POLE_TOL:
        raise PoleAtAngle("pole in transfer function", psi=psi)
    d_psi = ph * (db + b * b * da * ph) / den**2 * source
    d_phi = -1j * b * ph / den**2 * source
    return d_psi, d_phi


def fisher_information(weights: BeamformerWeights, psi: float, phi: float,
                       omega_s: float, sigma2: float, source: complex = 1.0,
                       n_points: int = 1024) -> FimResult:
    """Fisher information of the loop output over (psi, phi).

    Integrates Re{(dY/dp)^* (dY/dq)} / (2 pi sigma^2) over the band
    [-omega_s/2, omega_s/2] by the trapezoid rule (the integrand is flat for
    a narrowband flat source spectrum, but the quadrature is kept explicit).
    """
    if sigma2 <= 0 or omega_s <= 0:
        raise ValueError("sigma2 and omega_s must be positive")
    if n_points < 1024:
        n_points = 1024
    d_psi, d_phi = transfer_derivatives(weights, psi, phi, source)
    omega = np.linspace(-omega_s / 2.0, omega_s / 2.0, n_points)
    derivs = (d_psi, d_phi)
    j = np.empty((2, 2))
    for p in range(2):
        for q in range(p, 2):
            integrand = np.full(n_points, (np.conj(derivs[p]) * derivs[q]).real)
            j[p, q] = j[q, p] = np.trapezoid(integrand, omega) / (2.0 * np.pi * sigma2)
    return FimResult(j)
