//! One time step of the conditioned DPO state.
//!
//! The output field reaching the detectors is `E_in + sqrt(2 kappa) a`,
//! displaced by a coherent offset. A fraction `1 - r` goes to balanced
//! homodyne detection of the quadrature selected by `lo_phase`; the rest goes
//! to the photon-counting start detector. With `r = 0` the unravelling is
//! pure homodyne.

use num_complex::Complex64;

use super::fock::{ConditionedState, OperatorSet};
use crate::error::{Error, Result};
use crate::math::{phasor, quadrature, sqrt};
use crate::noise::NoiseStream;

/// Largest accepted population of the top tenth of Fock levels.
pub const MAX_TRUNCATION_LEAK: f64 = 1e-6;

/// Jump probabilities per step above this are flagged as too coarse.
pub const JUMP_WARN_PROBABILITY: f64 = 0.1;

/// Detection geometry shared by the homodyne and start channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channels {
    /// Fraction of the output diverted to the start detector.
    pub r: f64,
    /// Coherent offset added to the output before the split.
    pub offset: Complex64,
    pub lo_phase: f64,
}

impl Channels {
    pub fn homodyne(lo_phase: f64) -> Self {
        Channels {
            r: 0.0,
            offset: Complex64::new(0.0, 0.0),
            lo_phase,
        }
    }

    pub fn conditional(r: f64, offset_amp: f64, offset_phase: f64, lo_phase: f64) -> Self {
        Channels {
            r,
            offset: phasor(offset_phase) * offset_amp,
            lo_phase,
        }
    }
}

/// `<a>` using the precomputed ladder table.
#[inline]
fn mean_a(ops: &OperatorSet, psi: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..psi.len() {
        acc += psi[n - 1].conj() * psi[n] * ops.sqrt_n[n];
    }
    acc
}

#[inline]
fn photon_number(psi: &[Complex64]) -> f64 {
    psi.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
}

/// Homodyne charge in one step: `sqrt(1-r) 2 Re(e^{-i phi} <E>) dt + dW`,
/// with `<E> = E_off + E_in + sqrt(2 kappa) <a>`.
pub fn homodyne_charge_increment(
    state: &ConditionedState,
    ops: &OperatorSet,
    e_in: Complex64,
    channels: &Channels,
    stream: &mut NoiseStream,
    dt: f64,
) -> f64 {
    let field = channels.offset + e_in + mean_a(ops, &state.amps) * sqrt(2.0 * ops.kappa);
    sqrt(1.0 - channels.r) * 2.0 * quadrature(field, channels.lo_phase) * dt + sqrt(dt) * stream.standard_normal()
}

/// Advances the state by one step given the homodyne charge `dq`, then
/// renormalizes. Returns the squared norm before renormalization.
///
/// The unnormalized update is
/// `psi + [P dt + K + K^2/2 + (P K + K P) dt/2 - g^2 dt a^2/2] psi`, with the
/// damping factor taken to second order, where
/// `P = -kappa a^dag a + (kappa lambda/2)(a^dag^2 - a^2)` and `K` collects
/// every term linear in the ladder operators:
/// `K = -sqrt(2 kappa) E_in dt a^dag
///      + [sqrt(2 kappa)(E_in - r beta)^* dt + s] a`,
/// `beta = E_off + E_in`, `g = sqrt((1-r) 2 kappa) e^{-i phi}` and
/// `s = g dq0` with `dq0` the charge minus its known classical part.
/// Keeping `K^2/2` makes the classical displacement second-order accurate;
/// its `s^2 a^2/2` part with the `-g^2 dt` correction is the Milstein term.
/// The `P K` products stop the pump from feeding measurement noise into the
/// unmeasured quadrature.
pub fn sse_step(
    state: &mut ConditionedState,
    ops: &OperatorSet,
    e_in: Complex64,
    dq: f64,
    channels: &Channels,
    dt: f64,
) -> Result<f64> {
    let dim = state.amps.len();
    if dim != ops.dim {
        return Err(Error::invalid(
            "dim",
            dim as f64,
            "state and operators share a dimension",
        ));
    }
    if !dq.is_finite() {
        return Err(Error::invalid("dq", dq, "finite homodyne charge"));
    }
    let kappa = ops.kappa;
    let root = sqrt(2.0 * kappa);
    let beta = channels.offset + e_in;
    let transmit = sqrt(1.0 - channels.r);
    let dq0 = dq - transmit * 2.0 * quadrature(beta, channels.lo_phase) * dt;
    let g = phasor(-channels.lo_phase) * (transmit * root);
    let s = g * dq0;
    let up = -e_in * root * dt;
    let down = (e_in.conj() - beta.conj() * channels.r) * root * dt + s;
    let raise2 = up * up * 0.5;
    let lower2 = (down * down - g * g * dt) * 0.5;
    let mixed = up * down * 0.5;
    let pump = 0.5 * kappa * ops.lambda_pump * dt;

    let half_damp = 0.5 * kappa * dt;
    let damp_up = -half_damp * up;
    let damp_down = -half_damp * down;
    let pump_up = pump * up;
    let pump_down = pump * down;

    let psi = &state.amps;
    let out = &mut state.scratch;
    for n in 0..dim {
        let nf = n as f64;
        let damp = kappa * nf * dt;
        let mut v = psi[n] * (mixed * (2.0 * nf + 1.0) + (1.0 - damp + 0.5 * damp * damp));
        if n >= 1 {
            let cross = damp_up * (2.0 * nf - 1.0) + pump_down * nf;
            v += (up + cross) * ops.sqrt_n[n] * psi[n - 1];
        }
        if n >= 2 {
            v += psi[n - 2] * ((raise2 + pump) * ops.sqrt_pair[n - 2]);
        }
        if n >= 3 {
            v += pump_up * (ops.sqrt_pair[n - 2] * ops.sqrt_n[n - 2]) * psi[n - 3];
        }
        if n + 1 < dim {
            let cross = damp_down * (2.0 * nf + 1.0) - pump_up * (nf + 1.0);
            v += (down + cross) * ops.sqrt_n[n + 1] * psi[n + 1];
        }
        if n + 2 < dim {
            v += (lower2 - pump) * ops.sqrt_pair[n] * psi[n + 2];
        }
        if n + 3 < dim {
            v -= pump_down * (ops.sqrt_pair[n] * ops.sqrt_n[n + 3]) * psi[n + 3];
        }
        out[n] = v;
    }
    core::mem::swap(&mut state.amps, &mut state.scratch);
    let n2 = state.normalize()?;
    let leak = state.truncation_leak();
    if leak > MAX_TRUNCATION_LEAK {
        return Err(Error::TruncationLeak {
            trajectory: 0,
            dim,
            leak,
        });
    }
    Ok(n2)
}

/// Probability of a start count in `dt`:
/// `r <(beta + sqrt(2 kappa) a)^dag (beta + sqrt(2 kappa) a)> dt`.
pub fn start_jump_probability(
    state: &ConditionedState,
    ops: &OperatorSet,
    e_in: Complex64,
    channels: &Channels,
    dt: f64,
) -> Result<f64> {
    let beta = channels.offset + e_in;
    let a = mean_a(ops, &state.amps);
    let rate = beta.norm_sqr()
        + 2.0 * sqrt(2.0 * ops.kappa) * (beta.conj() * a).re
        + 2.0 * ops.kappa * photon_number(&state.amps);
    let p = channels.r * rate * dt;
    if p > 1.0 {
        return Err(Error::JumpProbability { p });
    }
    Ok(p.max(0.0))
}

/// Collapse on a start count: `psi <- (beta + sqrt(2 kappa) a) psi`,
/// renormalized.
pub fn apply_start_jump(
    state: &mut ConditionedState,
    ops: &OperatorSet,
    e_in: Complex64,
    channels: &Channels,
) -> Result<()> {
    let beta = channels.offset + e_in;
    let root = sqrt(2.0 * ops.kappa);
    let dim = state.amps.len();
    let psi = &state.amps;
    let out = &mut state.scratch;
    for n in 0..dim {
        let mut v = psi[n] * beta;
        if n + 1 < dim {
            v += psi[n + 1] * (root * ops.sqrt_n[n + 1]);
        }
        out[n] = v;
    }
    core::mem::swap(&mut state.amps, &mut state.scratch);
    state.normalize()?;
    Ok(())
}
