"""Compare the three beamformer families on a 3-element array.

A single target sits at theta = 60 deg. Sweeping the steer angle across the
visible region shows why feedback helps: the denominator of the feedback
response digs the sidelobes down and squeezes the main lobe, while the
plain weight-and-sum (FIR) response is stuck with the Dirichlet kernel.
The gain mismatch r = 1.1 keeps the feedback peaks finite so the patterns
are directly comparable.
"""
import numpy as np

from spatial_iir import (
    ArrayGeometry,
    beam_pattern,
    directivity,
    first_sidelobe_level,
    half_power_beamwidth,
    spatial_frequency,
)

geometry = ArrayGeometry(elements=3, spacing_wavelengths=0.5)
psi0 = spatial_frequency(np.deg2rad(60.0), geometry)

print(f"{'beamformer':>10s} {'HPBW (rad)':>12s} {'FSLL (dB)':>11s} {'directivity':>12s}")
for selector in ("fir", "single", "array"):
    pattern = beam_pattern(selector, psi0, geometry, r=1.1, k=1.0)
    print(f"{selector:>10s} {half_power_beamwidth(pattern):12.4f} "
          f"{first_sidelobe_level(pattern):11.2f} {directivity(pattern):12.2f}")

print()
print("With r == 1 the array-feedback loop gain hits exactly 1 at the target,")
print("so the pattern has a true pole there (clamped at 200 dB):")
ideal = beam_pattern("array", 0.0, ArrayGeometry(4), r=1.0, k=1.0)
print(f"  clamped: {ideal.clamped}, peak magnitude: "
      f"{np.abs(ideal.response).max():.3e}, "
      f"HPBW: {half_power_beamwidth(ideal):.2e} rad (grid-limited)")
