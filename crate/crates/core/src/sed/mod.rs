//! Classical (stochastic-electrodynamics) model of conditional homodyne
//! detection: every input port carries a realistic pseudo-vacuum field and
//! the correlation is built from moments of the filtered fields.

mod network;

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimators::{
    autocorrelation_sums, jackknife, spike_estimate, Batched, CorrelationEstimate, ExactSum, LagAccumulator, LagSums,
    Merge, TauGrid,
};
use crate::math::{abs, quadrature, round, sqrt};
use crate::model::{normal_ordered_spectrum, DetectionConfig, Quadrature, SystemParams};
use crate::noise::{NoiseStream, OuScheme, OuSource};
use crate::trajectory::{n_batches, offset_amplitude, offset_field};

pub use network::{
    beamsplitter, classical_dpo_step, local_oscillator, output_field, ClassicalDpoState, DpoPropagator, NetworkConfig,
    NetworkSample, SedChannelSet, SedNetwork, MAX_KAPPA_DT,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SedOptions {
    /// Steps between stored samples of the filtered fields.
    pub sample_stride: usize,
}

impl Default for SedOptions {
    fn default() -> Self {
        SedOptions { sample_stride: 5 }
    }
}

/// Pooled moments of one or more network runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SedAccumulator {
    /// `mean[|E'_start(t)|^2 D(t + tau)]` with `D = |E1'|^2 - |E2'|^2`.
    pub cross: LagAccumulator,
    /// Autocorrelation of the Y quadrature of the filtered DPO output.
    pub out_y: LagAccumulator,
    /// Autocorrelation of the Y quadrature of the filtered second vacuum.
    pub vac_y: LagAccumulator,
    pub start: ExactSum,
    pub difference: ExactSum,
    pub samples: u64,
}

impl SedAccumulator {
    pub fn new(grid: TauGrid) -> Self {
        SedAccumulator {
            cross: LagAccumulator::new(grid),
            out_y: LagAccumulator::new(grid),
            vac_y: LagAccumulator::new(grid),
            start: ExactSum::ZERO,
            difference: ExactSum::ZERO,
            samples: 0,
        }
    }

    pub fn mean_start_flux(&self) -> f64 {
        self.start.value() / self.samples as f64
    }

    pub fn mean_difference(&self) -> f64 {
        self.difference.value() / self.samples as f64
    }

    /// `h'(tau) = mean[S(0) D(tau)] / (mean S mean D)`.
    pub fn h_prime(&self) -> Result<Vec<f64>> {
        let denom = self.mean_start_flux() * self.mean_difference();
        if !(abs(denom) > 1e-300) || self.samples == 0 {
            return Err(Error::VanishingDenominator(
                "mean homodyne difference: the offset needs a component along the LO quadrature",
            ));
        }
        Ok(self.cross.means().iter().map(|m| m / denom).collect())
    }

    /// `<E_out^Y(0) E_out^Y(tau)> - <E_vac^Y(0) E_vac^Y(tau)>`.
    pub fn vacuum_subtracted(&self) -> Vec<f64> {
        self.out_y
            .means()
            .iter()
            .zip(self.vac_y.means())
            .map(|(o, v)| o - v)
            .collect()
    }
}

impl Merge for SedAccumulator {
    fn merge_from(&mut self, o: &Self) -> Result<()> {
        self.cross.merge_from(&o.cross)?;
        self.out_y.merge_from(&o.out_y)?;
        self.vac_y.merge_from(&o.vac_y)?;
        self.start += o.start;
        self.difference += o.difference;
        self.samples += o.samples;
        Ok(())
    }
}

fn steps(t: f64, dt: f64) -> usize {
    round(t / dt) as usize
}

/// Lag sums of `mean[a(t) b(t + tau)]` over base times whose whole lag window
/// lies inside the series.
fn cross_sums(a: &[f64], b: &[f64], offsets: &[isize]) -> LagSums {
    let reach = offsets[offsets.len() - 1] as usize;
    let mut sums = LagSums::new(offsets.len());
    if a.len() <= 2 * reach {
        return sums;
    }
    for t in reach..a.len() - reach {
        let x = a[t];
        for (bin, &o) in offsets.iter().enumerate() {
            sums.add(bin, x * b[(t as isize + o) as usize]);
        }
        sums.triggers += 1;
    }
    sums
}

fn network_config(config: &DetectionConfig, offset_amp: f64) -> NetworkConfig {
    NetworkConfig {
        r: config.r,
        offset: offset_field(config, offset_amp),
        lo: local_oscillator(config.lo_phase),
        dt: config.dt,
    }
}

/// One run of the classical network. Samples every `sample_stride` steps
/// after the transient; lags are taken on that coarser sampling.
pub fn sed_trajectory(
    params: &SystemParams,
    config: &DetectionConfig,
    offset_amp: f64,
    options: &SedOptions,
    trajectory: u64,
) -> Result<SedAccumulator> {
    let grid = config.tau_grid();
    let stride = options.sample_stride.max(1);
    let sample_dt = config.dt * stride as f64;
    let offsets = grid.sample_offsets(sample_dt);
    let n_steps = steps(config.t_max, config.dt);
    let skip = steps(params.transient_time(), config.dt);
    let mut net = SedNetwork::new(params, network_config(config, offset_amp), config.seed, trajectory)?;
    let cap = n_steps.saturating_sub(skip) / stride + 1;
    let (mut s, mut d) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
    let (mut oy, mut vy) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
    let mut acc = SedAccumulator::new(grid);
    for step in 0..n_steps {
        let sample = net.step()?;
        if step >= skip && (step - skip).is_multiple_of(stride) {
            let ch = sample.channels;
            s.push(ch.start_flux());
            d.push(ch.difference());
            oy.push(quadrature(sample.out, config.lo_phase));
            vy.push(quadrature(sample.vac, config.lo_phase));
        }
    }
    let reach = offsets[offsets.len() - 1] as usize;
    if s.len() <= 2 * reach {
        return Err(Error::InsufficientData {
            needed: 2 * reach + 1,
            have: s.len(),
        });
    }
    let mut cross = cross_sums(&s, &d, &offsets);
    cross.exposure = cross.triggers as f64 * sample_dt;
    acc.cross.record(&cross)?;
    acc.out_y.record(&autocorrelation_sums(&oy, &grid, sample_dt, 0, 1)?)?;
    acc.vac_y.record(&autocorrelation_sums(&vy, &grid, sample_dt, 0, 1)?)?;
    for k in 0..s.len() {
        acc.start.add(s[k]);
        acc.difference.add(d[k]);
    }
    acc.samples = s.len() as u64;
    Ok(acc)
}

pub fn validate_sed(params: &SystemParams, config: &DetectionConfig) -> Result<()> {
    params.validate()?;
    config.validate(params)?;
    if params.kappa * config.dt > MAX_KAPPA_DT {
        return Err(Error::StepTooLarge {
            what: "classical DPO",
            rate_dt: params.kappa * config.dt,
            limit: MAX_KAPPA_DT,
        });
    }
    let amp = offset_amplitude(params, config)?;
    if !(abs(quadrature(offset_field(config, amp), config.lo_phase)) > 1e-12) || config.r <= 0.0 {
        return Err(Error::VanishingDenominator(
            "mean homodyne difference: the offset needs a component along the LO quadrature and r > 0",
        ));
    }
    Ok(())
}

/// Sequential ensemble of network runs grouped into batches.
pub fn run_sed_ensemble(params: &SystemParams, config: &DetectionConfig) -> Result<Batched<SedAccumulator>> {
    validate_sed(params, config)?;
    let amp = offset_amplitude(params, config)?;
    let options = SedOptions::default();
    let mut batched = Batched::new(SedAccumulator::new(config.tau_grid()), n_batches(config.n_traj));
    for j in 0..config.n_traj as u64 {
        batched.add(j, &sed_trajectory(params, config, amp, &options, j)?)?;
    }
    Ok(batched)
}

fn estimate(
    batched: &Batched<SedAccumulator>,
    stat: impl Fn(&SedAccumulator) -> Result<Vec<f64>>,
) -> Result<CorrelationEstimate> {
    let total = batched.total()?;
    let (mean, stderr) = if batched.batches().len() >= 2 {
        jackknife(batched, stat)?
    } else {
        (stat(&total)?, total.cross.naive_stderr())
    };
    Ok(CorrelationEstimate {
        tau: total.cross.grid().points(),
        mean,
        stderr,
        count: total.cross.count.clone(),
    })
}

/// Moment estimate of `h'_Y` with jackknife errors.
pub fn sed_h_estimate(batched: &Batched<SedAccumulator>) -> Result<CorrelationEstimate> {
    estimate(batched, |acc| acc.h_prime())
}

/// Estimated vacuum-subtracted Y autocorrelation of the filtered fields.
pub fn vacuum_subtracted_estimate(batched: &Batched<SedAccumulator>) -> Result<CorrelationEstimate> {
    estimate(batched, |acc| Ok(acc.vacuum_subtracted()))
}

/// Height of the `tau = 0` feature of `h'_Y`, with its jackknife error.
pub fn sed_spike(batched: &Batched<SedAccumulator>, width: f64) -> Result<(f64, f64)> {
    let grid = *batched.total()?.cross.grid();
    spike_estimate(batched, &grid, width, |acc| acc.h_prime())
}

/// `h'_Y` of the classical network on `config.tau_grid()`.
pub fn run_sed_chd(params: &SystemParams, config: &DetectionConfig) -> Result<CorrelationEstimate> {
    sed_h_estimate(&run_sed_ensemble(params, config)?)
}

/// Least-squares fit of `h' - 1 = A [C_out - C_vac]` and the per-bin
/// residuals. The jackknife refits `A` in every replicate, so the residual
/// errors include the uncertainty of the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionFit {
    pub amplitude: f64,
    pub residual: CorrelationEstimate,
}

fn decomposition_residual(acc: &SedAccumulator) -> Result<(f64, Vec<f64>)> {
    let h = acc.h_prime()?;
    let c = acc.vacuum_subtracted();
    let (num, den) = h
        .iter()
        .zip(&c)
        .fold((0.0, 0.0), |(n, d), (hv, cv)| (n + (hv - 1.0) * cv, d + cv * cv));
    if !(den > 0.0) {
        return Err(Error::VanishingDenominator(
            "vacuum-subtracted autocorrelation is identically zero",
        ));
    }
    let amplitude = num / den;
    let residual = h.iter().zip(&c).map(|(hv, cv)| hv - 1.0 - amplitude * cv).collect();
    Ok((amplitude, residual))
}

pub fn fit_decomposition(batched: &Batched<SedAccumulator>) -> Result<DecompositionFit> {
    let amplitude = decomposition_residual(&batched.total()?)?.0;
    let residual = estimate(batched, |acc| Ok(decomposition_residual(acc)?.1))?;
    Ok(DecompositionFit { amplitude, residual })
}

/// Gaussian-moment prediction of `h'_Y` for an offset of amplitude
/// `offset_amp` along the LO quadrature:
/// `1 + (2r / <|E'_start|^2>) (|H|^2 G)(tau)`, where the start flux includes
/// the filtered vacuum of both ports.
pub fn sed_prediction(
    params: &SystemParams,
    config: &DetectionConfig,
    offset_amp: f64,
    taus: &[f64],
) -> Result<CorrelationEstimate> {
    let bd = params.detection_rate();
    let y = normal_ordered_spectrum(params, Quadrature::Y)?.lowpassed(bd);
    let x = normal_ordered_spectrum(params, Quadrature::X)?.lowpassed(bd);
    let filtered_flux = x.total_power() + y.total_power();
    let start = config.r * (offset_amp * offset_amp + filtered_flux) + bd / 4.0;
    let scale = 2.0 * config.r / start;
    Ok(CorrelationEstimate::deterministic(
        taus,
        taus.iter().map(|&t| 1.0 + scale * y.correlation(t)),
    ))
}

/// Mean and standard error of a scalar estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub stderr: f64,
}

fn scalar_from_batches(sums: &[(f64, u64)]) -> ScalarEstimate {
    let total: f64 = sums.iter().map(|s| s.0).sum();
    let n: u64 = sums.iter().map(|s| s.1).sum();
    let mean = total / n as f64;
    let b = sums.len() as f64;
    let var = if sums.len() >= 2 {
        let loo: Vec<f64> = sums.iter().map(|s| (total - s.0) / (n - s.1) as f64).collect();
        let m = loo.iter().sum::<f64>() / b;
        loo.iter().map(|v| (v - m) * (v - m)).sum::<f64>() * (b - 1.0) / b
    } else {
        f64::INFINITY
    };
    ScalarEstimate {
        mean,
        stderr: sqrt(var),
    }
}

/// Stationary `mean |E'_start|^2` with every physical input switched off:
/// no pump, no classical noise, no offset. What remains is the filtered
/// pseudo-vacuum of the two vacuum ports, a flux of `B_d kappa / 4` that a
/// real detector would never register.
pub fn sed_start_flux_diagnostic(config: &DetectionConfig, params: &SystemParams) -> Result<ScalarEstimate> {
    let dark = SystemParams {
        lambda_pump: 0.0,
        nbar_a: 0.0,
        ..*params
    };
    let net_config = NetworkConfig {
        r: config.r,
        offset: Complex64::new(0.0, 0.0),
        lo: local_oscillator(config.lo_phase),
        dt: config.dt,
    };
    let n_steps = steps(config.t_max, config.dt);
    let skip = steps(dark.transient_time(), config.dt);
    if n_steps <= skip {
        return Err(Error::InsufficientData {
            needed: skip + 1,
            have: n_steps,
        });
    }
    let batches = n_batches(config.n_traj);
    let mut sums = alloc::vec![(0.0, 0u64); batches];
    for j in 0..config.n_traj as u64 {
        let mut net = SedNetwork::new(&dark, net_config, config.seed, j)?;
        let mut acc = ExactSum::ZERO;
        for step in 0..n_steps {
            let flux = net.step()?.channels.start_flux();
            if step >= skip {
                acc.add(flux);
            }
        }
        let slot = &mut sums[(j % batches as u64) as usize];
        slot.0 += acc.value();
        slot.1 += (n_steps - skip) as u64;
    }
    Ok(scalar_from_batches(&sums))
}

/// Classical intracavity photon number with the pump off and only the
/// calibrated classical noise driving the cavity; it should equal `nbar_a`.
pub fn run_calibration(params: &SystemParams, config: &DetectionConfig) -> Result<ScalarEstimate> {
    let unpumped = SystemParams {
        lambda_pump: 0.0,
        ..*params
    };
    unpumped.validate()?;
    let dpo = DpoPropagator::new(&unpumped, config.dt)?;
    let n_steps = steps(config.t_max, config.dt);
    let skip = steps(unpumped.transient_time(), config.dt);
    if n_steps <= skip {
        return Err(Error::InsufficientData {
            needed: skip + 1,
            have: n_steps,
        });
    }
    let batches = n_batches(config.n_traj);
    let mut sums = alloc::vec![(0.0, 0u64); batches];
    for j in 0..config.n_traj as u64 {
        let mut stream = NoiseStream::new(config.seed, j);
        let mut ou = OuSource::stationary(&unpumped, OuScheme::Exact, &mut stream, config.dt)?;
        let mut state = ClassicalDpoState::default();
        let mut acc = ExactSum::ZERO;
        for step in 0..n_steps {
            state = dpo.step(state, ou.advance(&mut stream, config.dt)).0;
            if step >= skip {
                acc.add(state.alpha.norm_sqr());
            }
        }
        let slot = &mut sums[(j % batches as u64) as usize];
        slot.0 += acc.value();
        slot.1 += (n_steps - skip) as u64;
    }
    Ok(scalar_from_batches(&sums))
}
