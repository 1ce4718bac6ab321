//! Single-trajectory drivers and sequential ensembles for the homodyne and
//! conditional-homodyne experiments.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::fock::{build_operators, ConditionedState};
use super::sse::{
    apply_start_jump, homodyne_charge_increment, sse_step, start_jump_probability, Channels, JUMP_WARN_PROBABILITY,
};
use crate::error::{Error, Result};
use crate::estimators::{
    autocorrelation_sums, jackknife, normalize_h, normalize_h_ensemble, spike_estimate, Batched, CorrelationEstimate,
    ExactSum, LagAccumulator, LagSums, Merge, NormalizeMode, TauGrid,
};
use crate::math::{quadrature, round, sqrt};
use crate::model::{
    intracavity_moments, matched_offset_amplitude, output_flux, DetectionConfig, SystemParams,
    DEFAULT_WIDE_DETECTION_FACTOR,
};
use crate::noise::{LowPass, NoiseStream, OuScheme, OuSource};

/// Most batches an ensemble is split into for jackknife errors.
pub const MAX_BATCHES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    /// Fock dimension of the first attempt; doubled on every truncation leak.
    pub initial_dim: usize,
    pub max_dim: usize,
    /// Steps between samples of the intracavity moments.
    pub moment_stride: usize,
    pub ou_scheme: OuScheme,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            initial_dim: 16,
            max_dim: 256,
            moment_stride: 10,
            ou_scheme: OuScheme::Exact,
        }
    }
}

impl TrajectoryOptions {
    /// Defaults with a first dimension large enough for the mean photon
    /// number of `params`, so bright runs do not all restart.
    pub fn for_params(params: &SystemParams) -> Self {
        let mut options = TrajectoryOptions::default();
        let occupation = intracavity_moments(params).map(|m| m.photon_number).unwrap_or(0.0);
        while (options.initial_dim as f64) < 120.0 * occupation && options.initial_dim < options.max_dim {
            options.initial_dim *= 2;
        }
        options
    }
}

/// Time-averaged intracavity moments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentAccumulator {
    pub photon_number: ExactSum,
    pub y2: ExactSum,
    pub x2: ExactSum,
    pub samples: u64,
}

impl MomentAccumulator {
    pub fn means(&self) -> [f64; 3] {
        let n = self.samples as f64;
        [self.photon_number.value() / n, self.y2.value() / n, self.x2.value() / n]
    }
}

impl Merge for MomentAccumulator {
    fn merge_from(&mut self, other: &Self) -> Result<()> {
        self.photon_number += other.photon_number;
        self.y2 += other.y2;
        self.x2 += other.x2;
        self.samples += other.samples;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrajectoryStats {
    pub trajectories: u64,
    /// Largest Fock dimension any trajectory needed.
    pub max_dim: usize,
    /// Restarts caused by truncation leaks.
    pub restarts: u64,
    pub steps: u64,
    pub jumps: u64,
    /// Steps whose start-count probability exceeded the warning level.
    pub coarse_steps: u64,
}

impl Merge for TrajectoryStats {
    fn merge_from(&mut self, o: &Self) -> Result<()> {
        self.trajectories += o.trajectories;
        self.max_dim = self.max_dim.max(o.max_dim);
        self.restarts += o.restarts;
        self.steps += o.steps;
        self.jumps += o.jumps;
        self.coarse_steps += o.coarse_steps;
        Ok(())
    }
}

/// Everything one trajectory contributes to an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub lags: LagAccumulator,
    pub moments: MomentAccumulator,
    pub stats: TrajectoryStats,
}

impl TrajectoryResult {
    pub fn empty(grid: TauGrid) -> Self {
        TrajectoryResult {
            lags: LagAccumulator::new(grid),
            moments: MomentAccumulator::default(),
            stats: TrajectoryStats::default(),
        }
    }
}

impl Merge for TrajectoryResult {
    fn merge_from(&mut self, o: &Self) -> Result<()> {
        self.lags.merge_from(&o.lags)?;
        self.moments.merge_from(&o.moments)?;
        self.stats.merge_from(&o.stats)
    }
}

pub fn n_batches(n_traj: usize) -> usize {
    n_traj.clamp(1, MAX_BATCHES)
}

fn steps(t: f64, dt: f64) -> usize {
    round(t / dt) as usize
}

/// Offset amplitude actually used: the configured one, or the one whose flux
/// equals the DPO output flux.
pub fn offset_amplitude(params: &SystemParams, config: &DetectionConfig) -> Result<f64> {
    match config.offset_amp {
        Some(a) => Ok(a),
        None => matched_offset_amplitude(params),
    }
}

/// Retries `attempt` with doubled Fock dimension while it reports a
/// truncation leak.
fn with_growing_dim(
    trajectory: u64,
    options: &TrajectoryOptions,
    mut attempt: impl FnMut(usize) -> Result<TrajectoryResult>,
) -> Result<TrajectoryResult> {
    let mut dim = options.initial_dim.max(2);
    let mut restarts = 0;
    loop {
        match attempt(dim) {
            Ok(mut r) => {
                r.stats.restarts += restarts;
                r.stats.max_dim = dim;
                r.stats.trajectories = 1;
                return Ok(r);
            }
            Err(Error::TruncationLeak { leak, .. }) => {
                if dim * 2 > options.max_dim {
                    return Err(Error::TruncationLeak { trajectory, dim, leak });
                }
                dim *= 2;
                restarts += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn sample_moments(m: &mut MomentAccumulator, state: &ConditionedState) {
    m.photon_number.add(state.photon_number());
    m.y2.add(state.y2());
    m.x2.add(state.x2());
    m.samples += 1;
}

/// One homodyne-only trajectory: filtered current `i(t)` sampled every step
/// after the transient, folded into lag products on `config.tau_grid()`.
pub fn homodyne_trajectory(
    params: &SystemParams,
    config: &DetectionConfig,
    options: &TrajectoryOptions,
    trajectory: u64,
) -> Result<TrajectoryResult> {
    let grid = config.tau_grid();
    let dt = config.dt;
    let n_steps = steps(config.t_max, dt);
    let skip = steps(params.transient_time(), dt);
    let channels = Channels::homodyne(config.lo_phase);
    let filter = LowPass::new(params.detection_rate(), dt)?;
    with_growing_dim(trajectory, options, |dim| {
        let ops = build_operators(dim, params)?;
        let mut stream = NoiseStream::new(config.seed, trajectory);
        let mut noise = OuSource::stationary(params, options.ou_scheme, &mut stream, dt)?;
        let mut state = ConditionedState::vacuum(dim);
        let mut current = 0.0;
        let mut series = Vec::with_capacity(n_steps.saturating_sub(skip));
        let mut moments = MomentAccumulator::default();
        for step in 0..n_steps {
            let e_in = noise.advance(&mut stream, dt);
            let dq = homodyne_charge_increment(&state, &ops, e_in, &channels, &mut stream, dt);
            sse_step(&mut state, &ops, e_in, dq, &channels, dt)?;
            current = filter.step(current, dq);
            if step >= skip {
                series.push(current);
                if (step - skip).is_multiple_of(options.moment_stride.max(1)) {
                    sample_moments(&mut moments, &state);
                }
            }
        }
        let sums = autocorrelation_sums(&series, &grid, dt, 0, 1)?;
        Ok(TrajectoryResult {
            lags: LagAccumulator::from_sums(grid, &sums)?,
            moments,
            stats: TrajectoryStats {
                steps: n_steps as u64,
                ..Default::default()
            },
        })
    })
}

/// One conditional-homodyne trajectory. The current stored for step `n` is
/// the average of the filter output at the two ends of the step, which
/// aligns it with start counts decided at the beginning of the step. Every
/// start count in the eligible window contributes `i(t_n + tau)` on the whole
/// grid.
pub fn chd_trajectory(
    params: &SystemParams,
    config: &DetectionConfig,
    offset_amp: f64,
    options: &TrajectoryOptions,
    trajectory: u64,
) -> Result<TrajectoryResult> {
    let grid = config.tau_grid();
    let dt = config.dt;
    let n_steps = steps(config.t_max, dt);
    let skip = steps(params.transient_time(), dt);
    let offsets = grid.sample_offsets(dt);
    let reach = offsets[offsets.len() - 1] as usize;
    let ring_len = 2 * reach + 1;
    let first = skip + reach;
    let end = n_steps.saturating_sub(reach);
    if end <= first {
        return Err(Error::InsufficientData {
            needed: first + reach + 1,
            have: n_steps,
        });
    }
    let channels = Channels::conditional(config.r, offset_amp, config.offset_phase, config.lo_phase);
    let filter = LowPass::new(params.detection_rate(), dt)?;
    with_growing_dim(trajectory, options, |dim| {
        let ops = build_operators(dim, params)?;
        let mut stream = NoiseStream::new(config.seed, trajectory);
        let mut noise = OuSource::stationary(params, options.ou_scheme, &mut stream, dt)?;
        let mut state = ConditionedState::vacuum(dim);
        let mut current = 0.0;
        let mut ring = alloc::vec![0.0; ring_len];
        let mut pending: VecDeque<usize> = VecDeque::new();
        let mut sums = LagSums::new(grid.len());
        let mut moments = MomentAccumulator::default();
        let mut stats = TrajectoryStats {
            steps: n_steps as u64,
            ..Default::default()
        };
        for step in 0..n_steps {
            let e_in = noise.advance(&mut stream, dt);
            let p = start_jump_probability(&state, &ops, e_in, &channels, dt)?;
            if p > JUMP_WARN_PROBABILITY {
                stats.coarse_steps += 1;
            }
            if stream.uniform() < p {
                apply_start_jump(&mut state, &ops, e_in, &channels)?;
                stats.jumps += 1;
                if (first..end).contains(&step) {
                    pending.push_back(step);
                }
            }
            let dq = homodyne_charge_increment(&state, &ops, e_in, &channels, &mut stream, dt);
            sse_step(&mut state, &ops, e_in, dq, &channels, dt)?;
            let next = filter.step(current, dq);
            ring[step % ring_len] = 0.5 * (current + next);
            current = next;
            while let Some(&t) = pending.front() {
                if t + reach != step {
                    break;
                }
                pending.pop_front();
                sums.triggers += 1;
                for (bin, &o) in offsets.iter().enumerate() {
                    sums.add(bin, ring[(t as isize + o) as usize % ring_len]);
                }
            }
            if step >= skip && (step - skip).is_multiple_of(options.moment_stride.max(1)) {
                sample_moments(&mut moments, &state);
            }
        }
        sums.exposure = (end - first) as f64 * dt;
        Ok(TrajectoryResult {
            lags: LagAccumulator::from_sums(grid, &sums)?,
            moments,
            stats,
        })
    })
}

/// Runs `n_traj` trajectories in order and groups them into batches.
pub fn run_ensemble(
    n_traj: usize,
    grid: TauGrid,
    mut trajectory: impl FnMut(u64) -> Result<TrajectoryResult>,
) -> Result<Batched<TrajectoryResult>> {
    let mut batched = Batched::new(TrajectoryResult::empty(grid), n_batches(n_traj));
    for j in 0..n_traj as u64 {
        batched.add(j, &trajectory(j)?)?;
    }
    Ok(batched)
}

/// Ensemble mean of the lag products with jackknife errors.
pub fn autocorrelation_estimate(batched: &Batched<TrajectoryResult>) -> Result<CorrelationEstimate> {
    let total = batched.total()?;
    let (mean, stderr) = if batched.batches().len() >= 2 {
        jackknife(batched, |r| Ok(r.lags.means()))?
    } else {
        (total.lags.means(), total.lags.naive_stderr())
    };
    Ok(CorrelationEstimate {
        tau: total.lags.grid().points(),
        mean,
        stderr,
        count: total.lags.count.clone(),
    })
}

pub fn h_estimate(batched: &Batched<TrajectoryResult>, mode: NormalizeMode) -> Result<CorrelationEstimate> {
    let lags = batched.map(|b| b.lags.clone());
    let total = batched.total()?;
    if total.lags.triggers == 0 {
        return Err(Error::NoStartEvents);
    }
    normalize_h_ensemble(&lags, mode)
}

/// Height of the `tau = 0` feature of the current autocorrelation, with its
/// jackknife error.
pub fn autocorrelation_spike(batched: &Batched<TrajectoryResult>, width: f64) -> Result<(f64, f64)> {
    let grid = *batched.total()?.lags.grid();
    spike_estimate(batched, &grid, width, |r| Ok(r.lags.means()))
}

/// Height of the `tau = 0` feature of the normalized `h_Y`.
pub fn h_spike(batched: &Batched<TrajectoryResult>, mode: NormalizeMode, width: f64) -> Result<(f64, f64)> {
    let grid = *batched.total()?.lags.grid();
    spike_estimate(batched, &grid, width, |r| Ok(normalize_h(&r.lags, mode)?.mean))
}

/// Ensemble intracavity moments with jackknife errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub photon_number: (f64, f64),
    pub y2: (f64, f64),
    pub x2: (f64, f64),
}

pub fn moment_estimate(batched: &Batched<TrajectoryResult>) -> Result<MomentEstimate> {
    let moments = batched.map(|b| b.moments.clone());
    let (m, se) = jackknife(&moments, |acc| {
        if acc.samples == 0 {
            return Err(Error::InsufficientData { needed: 1, have: 0 });
        }
        Ok(acc.means().to_vec())
    })?;
    Ok(MomentEstimate {
        photon_number: (m[0], se[0]),
        y2: (m[1], se[1]),
        x2: (m[2], se[2]),
    })
}

/// Trigger-rate normalization for the conditional-homodyne estimate:
/// expected start rate `r (|E_off|^2 + F)` and mean current
/// `2 sqrt(1-r) Re(e^{-i phi} E_off)`.
pub fn chd_model_flux_mode(params: &SystemParams, config: &DetectionConfig) -> Result<NormalizeMode> {
    let amp = offset_amplitude(params, config)?;
    let offset = crate::math::phasor(config.offset_phase) * amp;
    Ok(NormalizeMode::ModelFlux {
        expected_rate: config.r * (amp * amp + output_flux(params)?),
        baseline: 2.0 * sqrt(1.0 - config.r) * quadrature(offset, config.lo_phase),
    })
}

pub fn validate_homodyne(params: &SystemParams, config: &DetectionConfig) -> Result<()> {
    params.validate()?;
    config.validate(params)
}

pub fn validate_chd(params: &SystemParams, config: &DetectionConfig) -> Result<()> {
    validate_homodyne(params, config)?;
    params.check_wide_detection(DEFAULT_WIDE_DETECTION_FACTOR)?;
    let amp = offset_amplitude(params, config)?;
    let baseline = quadrature(crate::math::phasor(config.offset_phase) * amp, config.lo_phase);
    if !(crate::math::abs(baseline) > 1e-12) {
        return Err(Error::VanishingDenominator(
            "mean homodyne current: the offset needs a component along the LO quadrature",
        ));
    }
    Ok(())
}

/// Stationary autocorrelation of the filtered homodyne current,
/// `mean[i(t) i(t + tau)]`, pooled over `n_traj` trajectories.
pub fn run_homodyne_autocorrelation(params: &SystemParams, config: &DetectionConfig) -> Result<CorrelationEstimate> {
    validate_homodyne(params, config)?;
    let options = TrajectoryOptions::for_params(params);
    let batched = run_ensemble(config.n_traj, config.tau_grid(), |j| {
        homodyne_trajectory(params, config, &options, j)
    })?;
    autocorrelation_estimate(&batched)
}

/// Conditional-homodyne estimate of `h_Y(tau)`, normalized to one in the
/// tails.
pub fn run_chd_experiment(params: &SystemParams, config: &DetectionConfig) -> Result<CorrelationEstimate> {
    validate_chd(params, config)?;
    let options = TrajectoryOptions::for_params(params);
    let amp = offset_amplitude(params, config)?;
    let batched = run_ensemble(config.n_traj, config.tau_grid(), |j| {
        chd_trajectory(params, config, amp, &options, j)
    })?;
    h_estimate(&batched, NormalizeMode::default())
}

/// Offset of a given amplitude along the configured phase.
pub fn offset_field(config: &DetectionConfig, amp: f64) -> Complex64 {
    crate::math::phasor(config.offset_phase) * amp
}
