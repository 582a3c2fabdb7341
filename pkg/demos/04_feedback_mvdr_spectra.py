"""Feedback-MVDR pseudo-spectra versus MUSIC on a 4-target scene.

Two retransmissions are enough for the swept feedback MVDR to place sharp
peaks on all four targets; the energy returned through a true reflector
grows by roughly the array gain per pass, so the peaks survive even when the
per-element SNR drops to 0 dB.  MUSIC needs the model order and a healthy
eigenvalue split, which gets shaky at low SNR.
"""
import numpy as np

from spatial_iir import (
    ArrayGeometry,
    TargetScene,
    feedback_mvdr_alg1,
    feedback_mvdr_alg2,
    music,
    peaks_to_angles,
    rmse,
    sample_autocorrelation,
    synthesize_snapshots,
    theta_grid,
)

geometry = ArrayGeometry(8, 0.5)
truth_deg = [40.0, 75.0, 110.0, 145.0]
grid = theta_grid(720)
sep = np.deg2rad(3.0)

for snr_db in (40.0, 0.0):
    scene = TargetScene.from_degrees(truth_deg, snr_db, 256, seed=1)
    print(f"--- per-element SNR {snr_db:.0f} dB, truth {truth_deg}")
    spec1 = feedback_mvdr_alg1(scene, geometry, retransmissions=2, grid=grid)
    pick1 = peaks_to_angles(spec1, 4, sep)
    print(f"  alg1 (2 passes): {np.round(np.rad2deg(pick1.angles), 2)}"
          f"   rmse {rmse(scene.thetas, pick1.angles):.2f} deg")
    spec2 = feedback_mvdr_alg2(scene, geometry, retransmissions=2, grid=grid)
    pick2 = peaks_to_angles(spec2, 4, sep)
    print(f"  alg2 (2 passes): {np.round(np.rad2deg(pick2.angles), 2)}"
          f"   rmse {rmse(scene.thetas, pick2.angles):.2f} deg")
    cov = sample_autocorrelation(synthesize_snapshots(scene, geometry))
    pickm = peaks_to_angles(music(cov, 4, grid), 4, sep)
    print(f"  music (L known): {np.round(np.rad2deg(pickm.angles), 2)}"
          f"   rmse {rmse(scene.thetas, pickm.angles):.2f} deg")
