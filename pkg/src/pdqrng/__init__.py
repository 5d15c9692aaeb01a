"""Entropy certification toolkit for phase-diffusion quantum random number
generators.

The package models an interferometric phase-diffusion source pulse by pulse,
pushes the signal through a detection chain with realistic digitizer errors,
characterizes that chain from calibration data, lower-bounds the average
min-entropy of the emitted symbols by linear programming over worst-case
source conditions, and sizes a Toeplitz extractor from the certified bound.
"""

__version__ = "0.1.0"

from .pulses import (  # noqa: F401
    ConditionVector,
    DriftScenario,
    PulseTrain,
    QuantumPhaseModel,
    adversarial_step_drift,
    constant_drift,
    generate_pulse_train,
    interference_power,
    random_walk_drift,
    read_pulse_train,
    sample_quantum_phase,
    sinusoidal_drift,
    write_pulse_train,
)
from .ratequations import (  # noqa: F401
    LaserRateParams,
    RateTrajectory,
    deterministic_fixed_point,
    integrate_rate_equations,
    phase_diffusion_sigma,
)
from .detection import (  # noqa: F401
    DigitizerErrorModel,
    ImpulseResponse,
    SymbolStream,
    convolve_train,
    default_error_model,
    digitize,
    ideal_thresholds,
    read_symbol_stream,
    write_symbol_stream,
)
from .characterize import (  # noqa: F401
    AutocorrelationProfile,
    CodeLimits,
    HangoverBounds,
    RecoveredResponse,
    characterize_digitizer,
    compute_autocorrelation,
    compute_hangover_bounds,
    read_calibration,
    recover_impulse_response,
    significant_max_lag,
    synthesize_calibration,
    write_calibration,
)
from .cdfs import (  # noqa: F401
    CdfKind,
    CellBox,
    cdf_gaussian_phase,
    cdf_single_arm,
    cdf_uniform_phase,
    cell_averaged_cdf,
    cell_averaged_cdf_table,
    evaluate_cdf,
    interference_support,
    interval_probability,
    wrapped_normal_mass,
)
from .entropylp import (  # noqa: F401
    ConstraintSet,
    Covering,
    EntropyCertificate,
    MonotonicityError,
    ObjectiveVector,
    SweepResult,
    build_constraints,
    build_covering,
    build_objective,
    hash_code_limits,
    hash_symbol_stream,
    resolution_sweep,
    solve_entropy_lp,
    worst_case_predictability,
    write_certificate,
    write_lp_text,
)
from .extractor import (  # noqa: F401
    ExtractorSpec,
    draw_seed,
    extract,
    hash_bits,
    output_length,
    read_bit_file,
    symbol_bits,
    toeplitz_extract,
    write_bit_file,
)
from .pipeline import (  # noqa: F401
    CampaignConfig,
    CampaignResult,
    bit_depth_sweep,
    eta_sweep,
    load_campaign_config,
    read_code_limits,
    reference_campaign,
    run_campaign,
    sigma_sweep,
    write_code_limits,
    write_sweep_csv,
)
