//! Quantum trajectories of the DPO in a truncated Fock basis.

mod fock;
mod run;
mod sse;

pub use fock::{build_operators, ConditionedState, OperatorSet, SparseOp};
pub use run::{
    autocorrelation_estimate, autocorrelation_spike, chd_model_flux_mode, chd_trajectory, h_estimate, h_spike,
    homodyne_trajectory, moment_estimate, n_batches, offset_amplitude, offset_field, run_chd_experiment, run_ensemble,
    run_homodyne_autocorrelation, validate_chd, validate_homodyne, MomentAccumulator, MomentEstimate,
    TrajectoryOptions, TrajectoryResult, TrajectoryStats, MAX_BATCHES,
};
pub use sse::{
    apply_start_jump, homodyne_charge_increment, sse_step, start_jump_probability, Channels, JUMP_WARN_PROBABILITY,
    MAX_TRUNCATION_LEAK,
};
