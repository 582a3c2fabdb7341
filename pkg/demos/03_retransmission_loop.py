"""Anatomy of the retransmission loop.

Each pass re-emits the beamformed output through the transmit weights; every
target reflects it back.  Off the target the loop gain is below one and the
output converges geometrically to the closed-loop transfer value; steered
exactly at the target the loop gain is one and the output grows linearly,
which is the spatial analogue of a marginally stable IIR pole.
"""
import numpy as np

from spatial_iir import (
    ArrayGeometry,
    TargetScene,
    array_feedback_response,
    loop_gain,
    optimal_weights,
    simulate_retransmission_loop,
    spatial_frequency,
)
from spatial_iir.arrays import clean_snapshots

geometry = ArrayGeometry(4, 0.5)
theta = 1.1
scene = TargetScene((theta,), snr_db=np.inf, snapshots=4, seed=3)
psi_target = spatial_frequency(theta, geometry)

steer = psi_target + 0.9
weights = optimal_weights(steer, geometry.elements, k=1.0)
q = loop_gain(weights, psi_target)
target_value = array_feedback_response(weights, psi_target)
amplitude = clean_snapshots(scene, geometry)[0, 0]
print(f"off-target steer: loop gain |q| = {abs(q):.3f}")
for n_passes in (0, 1, 2, 5, 20, 60):
    y, _ = simulate_retransmission_loop(scene, geometry, weights, n_passes)
    err = abs(y[0] - target_value * amplitude) / abs(target_value * amplitude)
    print(f"  after {n_passes:3d} passes: |y| = {abs(y[0]):8.4f}   "
          f"relative gap to closed form = {err:.2e}")

print()
print("steered exactly at the target (loop gain = 1): linear growth")
on_target = optimal_weights(psi_target, geometry.elements, k=1.0)
base = None
for n_passes in (0, 1, 3, 7):
    y, _ = simulate_retransmission_loop(scene, geometry, on_target, n_passes)
    base = base or abs(y[0])
    print(f"  after {n_passes:3d} passes: |y| / |y_0| = {abs(y[0]) / base:6.2f}")
