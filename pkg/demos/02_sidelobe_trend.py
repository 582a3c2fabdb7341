"""First-sidelobe level versus array size.

The feedback beamformer's first sidelobe decays like 1/N^2 (about -6 dB per
doubling of the element count) while the FIR sidelobe is pinned near
-13.3 dB no matter how many elements are added.  Two independent routes are
shown: numeric extraction from a dense pattern grid, and the closed-form
approximation.
"""
import numpy as np

from spatial_iir import (
    ArrayGeometry,
    beam_pattern,
    closed_form_fsll,
    feedback_fsll_grid,
    first_sidelobe_level,
)

print(f"{'N':>5s} {'feedback grid':>14s} {'closed form':>12s} {'FIR':>8s}")
prev = None
for n in (16, 32, 64, 128, 256, 512, 1024):
    grid_db = 10 * np.log10(feedback_fsll_grid(n))
    closed_db = 10 * np.log10(closed_form_fsll(n))
    fir_db = first_sidelobe_level(
        beam_pattern("fir", 0.0, ArrayGeometry(n), grid_points=max(8192, 64 * n)))
    note = "" if prev is None else f"   ({grid_db - prev:+.2f} dB per doubling)"
    print(f"{n:5d} {grid_db:14.2f} {closed_db:12.2f} {fir_db:8.2f}{note}")
    prev = grid_db
