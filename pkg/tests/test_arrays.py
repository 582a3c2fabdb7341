import numpy as np
import pytest

from spatial_iir import (
    ArrayGeometry,
    TargetScene,
    hermitian_eig,
    sample_autocorrelation,
    spatial_frequency,
    steering_vector,
    synthesize_snapshots,
)
from spatial_iir.arrays import clean_snapshots, pass_noise
from spatial_iir.errors import InvalidScene

HALF = ArrayGeometry(8, 0.5)


class TestSpatialFrequency:
    def test_broadside(self):
        assert spatial_frequency(np.pi / 2, HALF) == pytest.approx(0.0, abs=1e-15)

    def test_sixty_degrees(self):
        # cos(pi/3) = 1/2 -> psi = pi/2 at half-wavelength spacing
        assert spatial_frequency(np.pi / 3, HALF) == pytest.approx(np.pi / 2)

    def test_endfire(self):
        assert spatial_frequency(0.0, HALF) == pytest.approx(np.pi)


class TestSteeringVector:
    def test_zero_frequency(self):
        np.testing.assert_allclose(steering_vector(0.0, 3), np.ones(3))

    def test_pi(self):
        np.testing.assert_allclose(steering_vector(np.pi, 2), [1.0, -1.0], atol=1e-15)

    def test_quarter_turn(self):
        np.testing.assert_allclose(
            steering_vector(np.pi / 2, 3), [1.0, -1.0j, -1.0], atol=1e-15)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(1)
        for psi in rng.uniform(-np.pi, np.pi, 20):
            np.testing.assert_allclose(
                steering_vector(-psi, 6), steering_vector(psi, 6).conj())

    def test_unit_norm_squared(self):
        rng = np.random.default_rng(2)
        for psi in rng.uniform(-np.pi, np.pi, 20):
            v = steering_vector(psi, 16)
            assert abs(v.conj() @ v - 16.0) < 1e-12


class TestSceneValidation:
    def test_duplicate_angles_rejected(self):
        with pytest.raises(InvalidScene):
            TargetScene((1.0, 1.0), snr_db=0.0, snapshots=8, seed=0)

    def test_angle_outside_range_rejected(self):
        with pytest.raises(InvalidScene):
            TargetScene((0.0,), snr_db=0.0, snapshots=8, seed=0)

    def test_too_many_targets_rejected_at_synthesis(self):
        scene = TargetScene(tuple(np.linspace(0.3, 2.8, 8)), 0.0, 16, 0)
        with pytest.raises(InvalidScene):
            synthesize_snapshots(scene, HALF)

    def test_zero_snapshots_rejected(self):
        with pytest.raises(InvalidScene):
            TargetScene((1.0,), snr_db=0.0, snapshots=0, seed=0)

    def test_noise_power_from_snr(self):
        scene = TargetScene((1.0,), snr_db=10.0, snapshots=4, seed=0)
        assert scene.noise_power == pytest.approx(0.1)
        assert TargetScene((1.0,), np.inf, 4, 0).noise_power == 0.0


class TestSynthesis:
    def test_noise_only_autocorrelation_near_identity(self):
        scene = TargetScene((), snr_db=0.0, snapshots=20000, seed=3)
        r = synthesize_snapshots(scene, ArrayGeometry(4))
        cov = sample_autocorrelation(r)
        np.testing.assert_allclose(cov, np.eye(4), atol=0.1)

    def test_noiseless_rank_one(self):
        scene = TargetScene((np.pi / 3,), snr_db=np.inf, snapshots=32, seed=4)
        r = synthesize_snapshots(scene, HALF)
        v = steering_vector(spatial_frequency(np.pi / 3, HALF), 8)
        # every column proportional to the steering vector
        coeff = r[0, :]
        np.testing.assert_allclose(r, np.outer(v, coeff), atol=1e-12)

    def test_four_targets_give_four_dominant_eigenvalues(self):
        thetas = tuple(np.deg2rad([40, 75, 110, 145]))
        scene = TargetScene(thetas, snr_db=20.0, snapshots=256, seed=5)
        cov = sample_autocorrelation(synthesize_snapshots(scene, HALF))
        lam = hermitian_eig(cov).eigenvalues
        # expected covariance sum_k P v v^H + sigma^2 I keeps the 4 signal
        # eigenvalues far above the noise floor
        assert lam[3] > 5.0 * lam[4]

    def test_single_snapshot_outer_product(self):
        scene = TargetScene((1.2,), snr_db=0.0, snapshots=1, seed=6)
        r = synthesize_snapshots(scene, HALF)
        np.testing.assert_allclose(sample_autocorrelation(r),
                                   np.outer(r[:, 0], r[:, 0].conj()))

    def test_orthonormal_columns(self):
        basis = np.eye(4, dtype=complex)  # T = N standard-basis snapshots
        np.testing.assert_allclose(sample_autocorrelation(basis), np.eye(4) / 4.0)

    def test_direct_average_oracle(self):
        rng = np.random.default_rng(8)
        r = rng.standard_normal((5, 17)) + 1j * rng.standard_normal((5, 17))
        manual = sum(np.outer(r[:, i], r[:, i].conj()) for i in range(17)) / 17
        np.testing.assert_allclose(sample_autocorrelation(r), manual, atol=1e-12)

    def test_autocorrelation_psd(self):
        scene = TargetScene((0.7, 2.1), snr_db=5.0, snapshots=64, seed=9)
        cov = sample_autocorrelation(synthesize_snapshots(scene, HALF))
        assert hermitian_eig(cov).eigenvalues[-1] >= -1e-12

    def test_bit_reproducible(self):
        scene = TargetScene((0.9,), snr_db=3.0, snapshots=128, seed=42)
        a = synthesize_snapshots(scene, HALF)
        b = synthesize_snapshots(scene, HALF)
        assert np.array_equal(a, b)

    def test_pass_noise_streams_independent(self):
        scene = TargetScene((0.9,), snr_db=3.0, snapshots=64, seed=42)
        w0 = pass_noise(scene, HALF, 0)
        w1 = pass_noise(scene, HALF, 1)
        assert not np.array_equal(w0, w1)
        assert np.array_equal(w0, pass_noise(scene, HALF, 0))

    def test_synthesize_is_clean_plus_pass0_noise(self):
        scene = TargetScene((0.9, 1.7), snr_db=0.0, snapshots=32, seed=11)
        total = synthesize_snapshots(scene, HALF)
        np.testing.assert_array_equal(
            total, clean_snapshots(scene, HALF) + pass_noise(scene, HALF, 0))

    def test_empirical_noise_variance(self):
        scene = TargetScene((), snr_db=3.0, snapshots=100_000, seed=12)
        sigma2 = scene.noise_power
        w = pass_noise(scene, ArrayGeometry(2), 0)
        measured = np.mean(np.abs(w[0]) ** 2)
        assert abs(measured - sigma2) < 0.05 * sigma2
