"""Joint active/passive beamforming and Monte Carlo link simulation for
multi-surface mmWave downlinks with low-resolution phase shifters."""

from .analysis import (
    DiscretizationStats,
    ScalingLawParams,
    discretization_error_stats,
    eta,
    mean_phase_factor,
    theoretical_gamma,
)
from .beamformer import (
    BeamformingSolution,
    PhaseConfig,
    aligned_irs_gain,
    assemble_phi,
    brute_force_discrete,
    composite_row,
    effective_gain_vector,
    mrt_precoder,
    optimal_continuous_phases,
    quantize_phases,
    receive_power,
    solve_joint,
    upper_bound_power,
)
from .channel import (
    ChannelRealization,
    RankOneChannel,
    ShadowingTable,
    bs_irs_geometry,
    draw_geometric_realization,
    draw_rayleigh_realization,
    draw_shadowing_table,
    gen_bs_irs_channel,
    gen_direct_channel,
    gen_irs_user_channel,
    gen_rayleigh_irs_user,
    irs_user_distances,
    sample_path_gain,
    ula_response,
    ula_responses,
    ura_response,
    ura_responses,
)
from .cli import ConfigError, RunConfig, apply_overrides, parse_config, run, selfcheck
from .config import (
    LOS_28GHZ,
    NLOS_28GHZ,
    PathLossParams,
    ScenarioGeometry,
    SystemConfig,
    db_to_linear,
    dbi_to_amplitude,
    dbm_to_watts,
    linear_to_db,
)
from .simharness import (
    ExperimentResult,
    ExperimentSpec,
    ResultRow,
    aggregate,
    run_eta_validation,
    run_experiment,
    run_outage,
    run_snr_vs_distance,
    run_snr_vs_elements,
    trial_rng,
)

__version__ = "0.1.0"
