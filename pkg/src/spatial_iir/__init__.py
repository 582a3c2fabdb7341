"""Retransmission-based spatial IIR beamforming and DoA estimation.

The package is organized bottom-up:

* :mod:`spatial_iir.linalg`      -- small dense complex eigen/solve kernels
* :mod:`spatial_iir.arrays`      -- ULA geometry, steering, snapshot synthesis
* :mod:`spatial_iir.beamformers` -- FIR / feedback responses, optimal weights,
  the retransmission loop and Fisher information
* :mod:`spatial_iir.patterns`    -- beam patterns and HPBW / FSLL / directivity
* :mod:`spatial_iir.estimators`  -- feedback MVDR (algorithms 1 and 2) plus
  MUSIC, ESPRIT, robust / nested / reduced-dimension MVDR baselines
* :mod:`spatial_iir.experiments` -- config-driven experiment runners (CLI)
"""

from .arrays import (
    ArrayGeometry,
    TargetScene,
    sample_autocorrelation,
    spatial_frequency,
    steering_matrix,
    steering_vector,
    synthesize_snapshots,
)
from .beamformers import (
    BeamformerWeights,
    FimResult,
    array_feedback_response,
    fir_response,
    fisher_information,
    loop_gain,
    optimal_weights,
    simulate_retransmission_loop,
    single_feedback_response,
    transfer_derivatives,
    transfer_value,
)
from .estimators import (
    EstimationResult,
    PeakPick,
    PseudoSpectrum,
    esprit,
    feedback_mvdr_alg1,
    feedback_mvdr_alg2,
    inverse_filter_taps,
    music,
    mvdr_weights,
    nested_element_positions,
    nested_mvdr,
    peaks_to_angles,
    reduced_dim_mvdr,
    rmse,
    robust_mvdr,
    theta_grid,
)
from .linalg import (
    EigenDecomposition,
    hermitian_eig,
    hermitian_solve,
    is_hermitian,
    small_general_eigenvalues,
)
from .patterns import (
    BeamPattern,
    PatternMetrics,
    beam_pattern,
    closed_form_fsll,
    directivity,
    feedback_fsll_grid,
    first_sidelobe_level,
    half_power_beamwidth,
    pattern_metrics,
)

__version__ = "0.1.0"
