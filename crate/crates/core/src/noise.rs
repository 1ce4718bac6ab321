//! Seeded random processes: Wiener increments, the Ornstein-Uhlenbeck
//! filter-cavity noise, white pseudo-vacuum fields and single-pole filters.

use core::ops::{Add, Mul};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{exp, sqrt};
use crate::model::SystemParams;

/// Largest `rate*dt` accepted by the discretized linear filters.
pub const MAX_RATE_DT: f64 = 0.1;

/// Deterministic Gaussian/uniform source for one trajectory.
///
/// Streams with the same seed but different `stream_id` are independent
/// ChaCha streams; replaying a `(seed, stream_id)` pair reproduces every
/// draw bit for bit.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    stream_id: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        NoiseStream {
            seed,
            stream_id,
            counter: 0,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of samples drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.counter += 1;
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.counter += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Complex Gaussian with independent parts and `<|z|^2> = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
    }
}

/// A complex field amplitude in photon-flux units at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub amplitude: Complex64,
    pub timestamp: f64,
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", dt, "dt > 0"));
    }
    Ok(())
}

fn check_rate_dt(what: &'static str, rate: f64, dt: f64) -> Result<()> {
    check_dt(dt)?;
    if !(rate >= 0.0) {
        return Err(Error::invalid("rate", rate, "rate >= 0"));
    }
    if rate * dt > MAX_RATE_DT {
        return Err(Error::StepTooLarge {
            what,
            rate_dt: rate * dt,
            limit: MAX_RATE_DT,
        });
    }
    Ok(())
}

/// Real Wiener increment: mean 0, variance `dt`.
pub fn wiener_increment(stream: &mut NoiseStream, dt: f64) -> Result<f64> {
    check_dt(dt)?;
    Ok(sqrt(dt) * stream.standard_normal())
}

/// Complex Wiener increment with `<dW* dW> = dt` and `<dW dW> = 0`.
pub fn complex_wiener_increment(stream: &mut NoiseStream, dt: f64) -> Result<Complex64> {
    check_dt(dt)?;
    Ok(sqrt(dt) * stream.complex_normal())
}

/// Stationary variance `V = <|E|^2>` of the filter-cavity noise for which
/// the unpumped DPO holds `nbar_a` photons: `V = nbar_a kappa (1 + Bc)/2`.
pub fn calibrate_noise_strength(params: &SystemParams) -> Result<f64> {
    if !(params.nbar_a >= 0.0) {
        return Err(Error::invalid("nbar_a", params.nbar_a, "nbar_a >= 0"));
    }
    Ok(params.nbar_a * params.kappa * (1.0 + params.bc) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuScheme {
    /// Exact Gaussian transition over one step.
    #[default]
    Exact,
    /// Plain Euler-Maruyama, kept for cross-checks.
    Euler,
}

/// One step of `dE = -rate E dt + sqrt(2 rate V) dW` with complex `dW`.
pub fn ou_step(
    e_prev: Complex64,
    rate: f64,
    variance: f64,
    scheme: OuScheme,
    stream: &mut NoiseStream,
    dt: f64,
) -> Result<Complex64> {
    check_rate_dt("Ornstein-Uhlenbeck noise", rate, dt)?;
    if !(variance >= 0.0) {
        return Err(Error::invalid("variance", variance, "variance >= 0"));
    }
    let kick = stream.complex_normal();
    Ok(match scheme {
        OuScheme::Exact => {
            let decay = exp(-rate * dt);
            e_prev * decay + kick * sqrt(variance * (1.0 - decay * decay))
        }
        OuScheme::Euler => e_prev * (1.0 - rate * dt) + kick * sqrt(2.0 * rate * variance * dt),
    })
}

/// Exact OU step of the filter-cavity noise at rate `Bc kappa` with
/// stationary variance `variance` (see [`calibrate_noise_strength`]).
pub fn ou_noise_step(
    e_prev: Complex64,
    params: &SystemParams,
    variance: f64,
    stream: &mut NoiseStream,
    dt: f64,
) -> Result<Complex64> {
    ou_step(e_prev, params.noise_rate(), variance, OuScheme::Exact, stream, dt)
}

/// Filter-cavity noise source that hands out one step-averaged drive per
/// step.
#[derive(Debug, Clone)]
pub struct OuSource {
    decay: f64,
    kick: f64,
    euler: Option<(f64, f64)>,
    state: FieldSample,
}

impl OuSource {
    /// Starts from a draw of the stationary distribution.
    pub fn stationary(params: &SystemParams, scheme: OuScheme, stream: &mut NoiseStream, dt: f64) -> Result<Self> {
        let variance = calibrate_noise_strength(params)?;
        let rate = params.noise_rate();
        check_rate_dt("Ornstein-Uhlenbeck noise", rate, dt)?;
        let decay = exp(-rate * dt);
        let start = stream.complex_normal() * sqrt(variance);
        Ok(OuSource {
            decay,
            kick: sqrt(variance * (1.0 - decay * decay)),
            euler: match scheme {
                OuScheme::Exact => None,
                OuScheme::Euler => Some((1.0 - rate * dt, sqrt(2.0 * rate * variance * dt))),
            },
            state: FieldSample {
                amplitude: start,
                timestamp: 0.0,
            },
        })
    }

    pub fn current(&self) -> FieldSample {
        self.state
    }

    /// Advances by `dt` and returns the trapezoidal average of the field over
    /// the step.
    pub fn advance(&mut self, stream: &mut NoiseStream, dt: f64) -> Complex64 {
        let old = self.state.amplitude;
        let z = stream.complex_normal();
        let new = match self.euler {
            None => old * self.decay + z * self.kick,
            Some((a, k)) => old * a + z * k,
        };
        self.state = FieldSample {
            amplitude: new,
            timestamp: self.state.timestamp + dt,
        };
        (old + new) * 0.5
    }
}

/// White complex field with symmetric spectral density 1/2 (half a photon
/// per mode), held constant over a step: `<|E|^2> = 1/(2 dt)`.
pub fn pseudo_vacuum_sample(stream: &mut NoiseStream, dt: f64) -> Result<Complex64> {
    check_dt(dt)?;
    Ok(stream.complex_normal() * sqrt(0.5 / dt))
}

/// One step of `dy = -rate (y dt - dQ)`, with the input rate `dQ/dt` held
/// constant across the step. Unit gain at zero frequency.
pub fn single_pole_filter_step<T>(state: T, input_increment: T, rate: f64, dt: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    Ok(LowPass::new(rate, dt)?.step(state, input_increment))
}

/// Precomputed [`single_pole_filter_step`] for a fixed rate and step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    decay: f64,
    gain: f64,
}

impl LowPass {
    pub fn new(rate: f64, dt: f64) -> Result<Self> {
        check_rate_dt("single-pole filter", rate, dt)?;
        let decay = exp(-rate * dt);
        Ok(LowPass {
            decay,
            gain: (1.0 - decay) / dt,
        })
    }

    #[inline]
    pub fn step<T>(&self, state: T, input_increment: T) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        state * self.decay + input_increment * self.gain
    }

    /// Stationary variance of the output for white input of unit spectral
    /// density, exact for the discretization.
    pub fn white_noise_variance(&self, dt: f64) -> f64 {
        self.gain * self.gain * dt / (1.0 - self.decay * self.decay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_replay_and_differ() {
        let mut a = NoiseStream::new(7, 3);
        let mut b = NoiseStream::new(7, 3);
        let mut c = NoiseStream::new(7, 4);
        let xa: [f64; 4] = core::array::from_fn(|_| a.standard_normal());
        let xb: [f64; 4] = core::array::from_fn(|_| b.standard_normal());
        let xc: [f64; 4] = core::array::from_fn(|_| c.standard_normal());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!(a.counter(), 4);
        assert_eq!((a.seed(), a.stream_id()), (7, 3));
    }

    #[test]
    fn wiener_moments() {
        let dt = 0.01;
        let mut s = NoiseStream::new(1, 0);
        let n = 1_000_000;
        let (mut m, mut v) = (0.0, 0.0);
        for _ in 0..n {
            let w = wiener_increment(&mut s, dt).unwrap();
            m += w;
            v += w * w;
        }
        m /= n as f64;
        v /= n as f64;
        assert!(m.abs() < 4e-3 * dt.sqrt());
        assert!((v / dt - 1.0).abs() < 0.01);
        assert!(wiener_increment(&mut s, 0.0).is_err());
    }

    #[test]
    fn complex_wiener_moments() {
        let dt = 0.5;
        let mut s = NoiseStream::new(2, 0);
        let n = 1_000_000;
        let (mut mod2, mut sq, mut cross) = (0.0, Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..n {
            let w = complex_wiener_increment(&mut s, dt).unwrap();
            mod2 += w.norm_sqr();
            sq += w * w;
            cross += w.re * w.im;
        }
        let nf = n as f64;
        assert!((mod2 / nf / dt - 1.0).abs() < 0.01);
        // Each of Re/Im of <dW dW> has stderr dt/sqrt(2n).
        let se = dt / (2.0 * nf).sqrt();
        assert!((sq / nf).norm() < 4.0 * se);
        assert!((cross / nf).abs() < 3.0 * dt / 2.0 / nf.sqrt());
    }

    #[test]
    fn calibration_values() {
        let p = SystemParams::baseline(0.2);
        assert!((calibrate_noise_strength(&p).unwrap() - 1.6).abs() < 1e-15);
        assert_eq!(calibrate_noise_strength(&p.with_nbar(0.0)).unwrap(), 0.0);
        let v1 = calibrate_noise_strength(&p.with_nbar(0.1)).unwrap();
        assert_eq!(2.0 * v1, calibrate_noise_strength(&p.with_nbar(0.2)).unwrap());
    }

    #[test]
    fn ou_zero_drive_decays() {
        let p = SystemParams::baseline(0.0);
        let mut s = NoiseStream::new(3, 0);
        let e = ou_noise_step(Complex64::new(1.0, -2.0), &p, 0.0, &mut s, 0.002).unwrap();
        let d = (-15.0f64 * 0.002).exp();
        assert!((e - Complex64::new(d, -2.0 * d)).norm() < 1e-15);
        assert!(ou_noise_step(e, &p, 1.0, &mut s, 0.01).is_err());
    }

    #[test]
    fn ou_stationary_statistics() {
        let p = SystemParams::baseline(0.2);
        let v = calibrate_noise_strength(&p).unwrap();
        let dt = 0.002;
        let mut s = NoiseStream::new(4, 0);
        let mut e = s.complex_normal() * v.sqrt();
        let lag = 25; // 0.05 time units
        let mut hist = std::vec![Complex64::new(0.0, 0.0); lag + 1];
        let n = 2_000_000;
        let (mut m2, mut c) = (0.0, 0.0);
        for i in 0..n {
            e = ou_noise_step(e, &p, v, &mut s, dt).unwrap();
            hist[i % (lag + 1)] = e;
            m2 += e.norm_sqr();
            if i >= lag {
                c += (hist[(i - lag) % (lag + 1)].conj() * e).re;
            }
        }
        let m2 = m2 / n as f64;
        let c = c / (n - lag) as f64;
        // Correlation time 1/15: about 1.5e5 independent samples.
        assert!((m2 / v - 1.0).abs() < 0.01, "{m2}");
        let expect = v * (-15.0f64 * 0.05).exp();
        assert!((c / expect - 1.0).abs() < 0.02, "{c} {expect}");
    }

    #[test]
    fn euler_and_exact_agree_for_small_steps() {
        let p = SystemParams::baseline(0.2);
        let dt = 1e-3;
        let mut s1 = NoiseStream::new(5, 0);
        let mut s2 = NoiseStream::new(5, 0);
        let mut a = OuSource::stationary(&p, OuScheme::Exact, &mut s1, dt).unwrap();
        let mut b = OuSource::stationary(&p, OuScheme::Euler, &mut s2, dt).unwrap();
        for _ in 0..200 {
            a.advance(&mut s1, dt);
            b.advance(&mut s2, dt);
        }
        assert!((a.current().amplitude - b.current().amplitude).norm() < 0.05);
        assert!((a.current().timestamp - 0.2).abs() < 1e-12);
    }

    #[test]
    fn filter_dc_gain_and_impulse() {
        let (rate, dt) = (25.0, 0.002);
        let mut y = 0.0;
        for _ in 0..5000 {
            y = single_pole_filter_step(y, 3.0 * dt, rate, dt).unwrap();
        }
        assert!((y - 3.0).abs() < 1e-12);
        let lp = LowPass::new(rate, dt).unwrap();
        let mut y = lp.step(0.0, 1.0);
        let y0 = y;
        for _ in 0..100 {
            y = lp.step(y, 0.0);
        }
        assert!((y / y0 - (-rate * 100.0 * dt).exp()).abs() < 1e-12);
        assert!(LowPass::new(rate, 0.01).is_err());
    }

    #[test]
    fn filtered_white_noise_variance() {
        let (rate, dt) = (25.0, 0.002);
        let lp = LowPass::new(rate, dt).unwrap();
        assert!((lp.white_noise_variance(dt) / (rate / 2.0) - 1.0).abs() < 1e-3);
        let mut s = NoiseStream::new(6, 0);
        let (mut y, mut acc) = (0.0, 0.0);
        let n = 1_000_000;
        for _ in 0..n {
            y = lp.step(y, wiener_increment(&mut s, dt).unwrap());
            acc += y * y;
        }
        assert!((acc / n as f64 / (rate / 2.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn pseudo_vacuum_through_filter() {
        let (rate, dt) = (25.0, 0.002);
        let lp = LowPass::new(rate, dt).unwrap();
        let mut s = NoiseStream::new(8, 0);
        let mut y = Complex64::new(0.0, 0.0);
        let (mut flux, mut x2, mut y2) = (0.0, 0.0, 0.0);
        let n = 1_000_000;
        for _ in 0..n {
            y = lp.step(y, pseudo_vacuum_sample(&mut s, dt).unwrap() * dt);
            flux += y.norm_sqr();
            x2 += y.re * y.re;
            y2 += y.im * y.im;
        }
        let nf = n as f64;
        // Density 1/2 through a filter of noise bandwidth rate/2.
        assert!((flux / nf / (rate / 4.0) - 1.0).abs() < 0.02);
        assert!(((x2 - y2) / (x2 + y2)).abs() < 0.02);
    }

    #[test]
    fn filter_is_linear() {
        let lp = LowPass::new(10.0, 0.001).unwrap();
        let mut s = NoiseStream::new(9, 0);
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for _ in 0..10_000 {
            let (u, v) = (s.standard_normal(), s.standard_normal());
            a = lp.step(a, u);
            b = lp.step(b, v);
            ab = lp.step(ab, u + v);
            assert!((ab - (a + b)).abs() < 1e-12 * (1.0 + ab.abs()));
        }
    }
}
