"""Sub-array multicast beamforming and composite-beam gain estimation
for mmWave uniform linear arrays, with brute-force oracles, an
ALTER-style baseline, and a seeded Monte Carlo harness."""

from .channel import (
    ChannelPath,
    ChannelStats,
    LinkParams,
    MultipathChannel,
    beam_gain,
    channel_vector,
    received_symbol,
    sample_channel,
    steering_vector,
)
from .training import (
    CalibrationTable,
    Codebook,
    CompositeCalibration,
    SweepOutcome,
    TrainingTriple,
    beam_sweep,
    build_codebook,
    calibrate_composite,
    composite_gain,
    compute_z,
    estimate_gain,
    neighbor_training,
    ripple_bound,
    run_algorithm1,
)
from .multicast import (
    BeamformerDesign,
    DegenerateUserError,
    DesignConfig,
    PhaseFactors,
    SubArrayLayout,
    UserEstimate,
    allocate_subarrays,
    assemble_beamformer,
    equal_snr_diagnostic,
    estimated_channels,
    min_snr_objective,
    optimize_phase_factors,
    quantized_angle_set,
    run_algorithm2,
    subarray_weight,
)
from .baselines import (
    OracleResult,
    SearchSpaceError,
    alter_baseline,
    exhaustive_beamformer_oracle,
    exhaustive_factor_oracle,
    matched_filter_bound,
)
from .harness import (
    AggregateRow,
    AggregateStats,
    ExperimentConfig,
    TrialRecord,
    emit_results,
    run_gain_error_experiment,
    run_minsnr_experiment,
)

__version__ = "0.1.0"
