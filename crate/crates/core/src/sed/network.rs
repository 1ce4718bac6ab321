use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{exp, phasor, sqrt};
use crate::model::SystemParams;
use crate::noise::{pseudo_vacuum_sample, LowPass, NoiseStream, OuScheme, OuSource};

/// Largest `kappa dt` accepted by the classical DPO integrator.
pub const MAX_KAPPA_DT: f64 = 0.01;

/// Classical intracavity amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicalDpoState {
    pub alpha: Complex64,
}

/// Exact propagator of the linear amplitude equation
/// `d alpha = [-kappa alpha + kappa lambda alpha^* - sqrt(2 kappa) E] dt` over
/// one step with `E` held constant. X and Y decouple with rates
/// `kappa (1 -+ lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpoPropagator {
    root: f64,
    rate: [f64; 2],
    decay: [f64; 2],
    /// `(1 - decay) / (rate dt)`: weight of the start value in the step average.
    mean_weight: [f64; 2],
}

impl DpoPropagator {
    pub fn new(params: &SystemParams, dt: f64) -> Result<Self> {
        params.validate()?;
        let k_dt = params.kappa * dt;
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", dt, "dt > 0"));
        }
        if k_dt > MAX_KAPPA_DT {
            return Err(Error::StepTooLarge {
                what: "classical DPO",
                rate_dt: k_dt,
                limit: MAX_KAPPA_DT,
            });
        }
        let rate = [params.antisqueezed_rate(), params.squeezed_rate()];
        let decay = rate.map(|g| exp(-g * dt));
        let mean_weight = [0, 1].map(|q| (1.0 - decay[q]) / (rate[q] * dt));
        Ok(DpoPropagator {
            root: sqrt(2.0 * params.kappa),
            rate,
            decay,
            mean_weight,
        })
    }

    /// Advances the state and returns it together with its average over the
    /// step.
    pub fn step(&self, state: ClassicalDpoState, e_in: Complex64) -> (ClassicalDpoState, ClassicalDpoState) {
        let start = [state.alpha.re, state.alpha.im];
        let drive = [e_in.re, e_in.im];
        let mut end = [0.0; 2];
        let mut mean = [0.0; 2];
        for q in 0..2 {
            let fixed = -self.root * drive[q] / self.rate[q];
            end[q] = fixed + (start[q] - fixed) * self.decay[q];
            mean[q] = fixed + (start[q] - fixed) * self.mean_weight[q];
        }
        (
            ClassicalDpoState {
                alpha: Complex64::new(end[0], end[1]),
            },
            ClassicalDpoState {
                alpha: Complex64::new(mean[0], mean[1]),
            },
        )
    }
}

/// One step of the classical DPO driven by the total input field `e_in`.
pub fn classical_dpo_step(
    state: ClassicalDpoState,
    e_in: Complex64,
    params: &SystemParams,
    dt: f64,
) -> Result<ClassicalDpoState> {
    Ok(DpoPropagator::new(params, dt)?.step(state, e_in).0)
}

/// `E_out = E_in + sqrt(2 kappa) alpha`.
pub fn output_field(state: ClassicalDpoState, e_in: Complex64, kappa: f64) -> Complex64 {
    e_in + state.alpha * sqrt(2.0 * kappa)
}

/// Lossless two-port: `out1 = sqrt(1-r) in1 - sqrt(r) in2`,
/// `out2 = sqrt(r) in1 + sqrt(1-r) in2`.
pub fn beamsplitter(in1: Complex64, in2: Complex64, r: f64) -> (Complex64, Complex64) {
    let t = sqrt(1.0 - r);
    let s = sqrt(r);
    (in1 * t - in2 * s, in1 * s + in2 * t)
}

/// Filtered detector fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SedChannelSet {
    pub e1: Complex64,
    pub e2: Complex64,
    pub e_start: Complex64,
}

impl SedChannelSet {
    pub fn start_flux(&self) -> f64 {
        self.e_start.norm_sqr()
    }

    /// Balanced-homodyne difference `|E1'|^2 - |E2'|^2`.
    pub fn difference(&self) -> f64 {
        self.e1.norm_sqr() - self.e2.norm_sqr()
    }
}

/// Settings of the classical field network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub r: f64,
    pub offset: Complex64,
    pub lo: Complex64,
    pub dt: f64,
}

/// Everything the estimators read after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSample {
    pub channels: SedChannelSet,
    /// Filtered DPO output without the offset.
    pub out: Complex64,
    /// Filtered second vacuum input.
    pub vac: Complex64,
    pub alpha: Complex64,
}

/// The classical detection network: classical noise and pseudo-vacuum into
/// the DPO, the offset added to its output, a second pseudo-vacuum mixed in
/// at the start beam splitter, the local oscillator mixed in at the homodyne
/// beam splitter, and a single-pole filter on every detected field. Each
/// input owns its own noise stream.
#[derive(Debug, Clone)]
pub struct SedNetwork {
    kappa: f64,
    config: NetworkConfig,
    dpo: DpoPropagator,
    filter: LowPass,
    ou: OuSource,
    streams: [NoiseStream; 3],
    state: ClassicalDpoState,
    filtered: SedChannelSet,
    out: Complex64,
    vac: Complex64,
}

impl SedNetwork {
    /// Noise streams `4 trajectory + k` of `seed`, `k` = 0 for the classical
    /// noise and 1, 2 for the two vacuum ports.
    pub fn new(params: &SystemParams, config: NetworkConfig, seed: u64, trajectory: u64) -> Result<Self> {
        if !(config.r >= 0.0 && config.r <= 1.0) {
            return Err(Error::invalid("r", config.r, "0 <= r <= 1"));
        }
        let base = trajectory.checked_mul(4).ok_or(Error::invalid(
            "trajectory",
            trajectory as f64,
            "trajectory index < 2^62",
        ))?;
        let mut streams = [
            NoiseStream::new(seed, base),
            NoiseStream::new(seed, base + 1),
            NoiseStream::new(seed, base + 2),
        ];
        let ou = OuSource::stationary(params, OuScheme::Exact, &mut streams[0], config.dt)?;
        Ok(SedNetwork {
            kappa: params.kappa,
            config,
            dpo: DpoPropagator::new(params, config.dt)?,
            filter: LowPass::new(params.detection_rate(), config.dt)?,
            ou,
            streams,
            state: ClassicalDpoState::default(),
            filtered: SedChannelSet::default(),
            out: Complex64::new(0.0, 0.0),
            vac: Complex64::new(0.0, 0.0),
        })
    }

    pub fn step(&mut self) -> Result<NetworkSample> {
        let dt = self.config.dt;
        let [s0, s1, s2] = &mut self.streams;
        let e_in = self.ou.advance(s0, dt) + pseudo_vacuum_sample(s1, dt)?;
        let e_vac = pseudo_vacuum_sample(s2, dt)?;
        let (next, mean) = self.dpo.step(self.state, e_in);
        self.state = next;
        let e_out = output_field(mean, e_in, self.kappa);
        let (homodyne, start) = beamsplitter(e_out + self.config.offset, e_vac, self.config.r);
        let (e2, e1) = beamsplitter(self.config.lo, homodyne, 0.5);
        let f = &self.filter;
        self.filtered = SedChannelSet {
            e1: f.step(self.filtered.e1, e1 * dt),
            e2: f.step(self.filtered.e2, e2 * dt),
            e_start: f.step(self.filtered.e_start, start * dt),
        };
        self.out = f.step(self.out, e_out * dt);
        self.vac = f.step(self.vac, e_vac * dt);
        Ok(NetworkSample {
            channels: self.filtered,
            out: self.out,
            vac: self.vac,
            alpha: self.state.alpha,
        })
    }
}

/// Local oscillator of unit amplitude at `phase`.
pub fn local_oscillator(phase: f64) -> Complex64 {
    phasor(phase)
}
