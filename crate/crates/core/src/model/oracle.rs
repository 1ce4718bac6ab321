//! Gaussian-moment predictions for every correlation the simulations
//! measure. All of them are closed-form lag transforms of the normally
//! ordered output spectra.

use super::lorentzian::SpectralDensity;
use super::params::SystemParams;
use super::spectra::{InputNoise, Quadrature};
use crate::error::{Error, Result};
use crate::estimators::CorrelationEstimate;

/// Below this output flux `h_Y` has no meaningful normalization.
const MIN_FLUX: f64 = 1e-300;

/// Normally ordered output spectrum `(N/2) R + (R - 1)/4`, where `R` is the
/// Lorentzian ratio of the chosen quadrature. It is the symmetric-order
/// spectrum minus the vacuum floor `1/4`.
pub fn normal_ordered_spectrum_with(
    params: &SystemParams,
    noise: InputNoise,
    quadrature: Quadrature,
) -> Result<SpectralDensity> {
    params.validate()?;
    let a = params.antisqueezed_rate();
    let b = params.squeezed_rate();
    let (sign, pole) = match quadrature {
        Quadrature::X => (1.0, a),
        Quadrature::Y => (-1.0, b),
    };
    let half = noise.density().scaled(0.5);
    let shaped = half
        .plus(&SpectralDensity::white(0.25))
        .times_pole(pole)
        .scaled(sign * (b * b - a * a));
    Ok(half.plus(&shaped))
}

pub fn normal_ordered_spectrum(params: &SystemParams, quadrature: Quadrature) -> Result<SpectralDensity> {
    normal_ordered_spectrum_with(params, InputNoise::from_params(params), quadrature)
}

/// Photon flux of the DPO output, `<:E_X^2:> + <:E_Y^2:>`.
pub fn output_flux(params: &SystemParams) -> Result<f64> {
    let x = normal_ordered_spectrum(params, Quadrature::X)?;
    let y = normal_ordered_spectrum(params, Quadrature::Y)?;
    Ok(x.total_power() + y.total_power())
}

/// `<:E_Y(0) E_Y(tau):>` of the output field.
pub fn normal_ordered_y_correlation(params: &SystemParams, tau: f64) -> Result<f64> {
    Ok(normal_ordered_spectrum(params, Quadrature::Y)?.correlation(tau))
}

fn checked_flux(params: &SystemParams) -> Result<f64> {
    let flux = output_flux(params)?;
    if !(flux > MIN_FLUX) {
        return Err(Error::Undefined(
            "h_Y needs a nonzero output flux (lambda = 0 with no classical noise)",
        ));
    }
    Ok(flux)
}

/// `1 + G(tau)/F` for an ideal, infinitely fast homodyne detector, with `G`
/// the normally ordered Y correlation and `F` the output flux.
pub fn oracle_h_y_ideal(params: &SystemParams, taus: &[f64]) -> Result<CorrelationEstimate> {
    let flux = checked_flux(params)?;
    let g = normal_ordered_spectrum(params, Quadrature::Y)?;
    Ok(CorrelationEstimate::deterministic(
        taus,
        taus.iter().map(|&t| 1.0 + g.correlation(t) / flux),
    ))
}

/// Conditional-homodyne prediction for an offset of flux `offset_flux`
/// along the measured quadrature, with the homodyne current passed through
/// the causal detection filter:
/// `1 + 2 (k * G)(tau) / (offset_flux + F)`.
pub fn chd_prediction(params: &SystemParams, offset_flux: f64, taus: &[f64]) -> Result<CorrelationEstimate> {
    let flux = checked_flux(params)?;
    if !(offset_flux >= 0.0) {
        return Err(Error::invalid("offset_flux", offset_flux, "offset_flux >= 0"));
    }
    let g = normal_ordered_spectrum(params, Quadrature::Y)?;
    let bd = params.detection_rate();
    let scale = 2.0 / (offset_flux + flux);
    Ok(CorrelationEstimate::deterministic(
        taus,
        taus.iter().map(|&t| 1.0 + scale * g.causal_filtered_correlation(bd, t)),
    ))
}

/// `h_Y` at the offset whose flux equals the output flux, where the
/// conditional-homodyne normalization reduces to `1 + (k * G)/F`.
pub fn oracle_h_y(params: &SystemParams, taus: &[f64]) -> Result<CorrelationEstimate> {
    let flux = checked_flux(params)?;
    chd_prediction(params, flux, taus)
}

/// Stationary autocorrelation of the filtered homodyne current
/// `di = -Bd (i dt - dQ)`, `dQ = 2 E_Y dt + dW`: shot noise plus four times
/// the normally ordered Y spectrum, both low-passed by the detector.
pub fn oracle_current_autocorrelation(params: &SystemParams, taus: &[f64]) -> Result<CorrelationEstimate> {
    let current = current_spectrum(params)?;
    Ok(CorrelationEstimate::deterministic(
        taus,
        taus.iter().map(|&t| current.correlation(t)),
    ))
}

/// Spectrum of the filtered homodyne current.
pub fn current_spectrum(params: &SystemParams) -> Result<SpectralDensity> {
    let y = normal_ordered_spectrum(params, Quadrature::Y)?;
    Ok(y.scaled(4.0)
        .plus(&SpectralDensity::white(1.0))
        .lowpassed(params.detection_rate()))
}

/// Stationary intracavity moments. `x2` and `y2` are `<x^2>` and `<y^2>` of
/// the Hermitian quadratures `x = (a + a^dag)/2`, `y = (a - a^dag)/2i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntracavityMoments {
    pub x2: f64,
    pub y2: f64,
    pub photon_number: f64,
}

/// Intracavity moments with the vacuum half photon included (`quantum`) or
/// left out (classical field driven by the same noise).
pub fn intracavity_moments_with(params: &SystemParams, noise: InputNoise, quantum: bool) -> Result<IntracavityMoments> {
    params.validate()?;
    let vacuum = if quantum { 0.5 } else { 0.0 };
    // Each input quadrature carries (n(w) + vacuum)/2.
    let input = noise.density().plus(&SpectralDensity::white(vacuum)).scaled(0.5);
    let k2 = 2.0 * params.kappa;
    let x2 = input.times_pole(params.antisqueezed_rate()).scaled(k2).total_power();
    let y2 = input.times_pole(params.squeezed_rate()).scaled(k2).total_power();
    Ok(IntracavityMoments {
        x2,
        y2,
        photon_number: x2 + y2 - vacuum,
    })
}

pub fn intracavity_moments(params: &SystemParams) -> Result<IntracavityMoments> {
    intracavity_moments_with(params, InputNoise::from_params(params), true)
}

/// Offset amplitude whose flux matches the output flux.
pub fn matched_offset_amplitude(params: &SystemParams) -> Result<f64> {
    Ok(crate::math::sqrt(checked_flux(params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use std::vec;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    /// Direct quadrature of `int S(w) cos(w tau) dw / 2pi`. The `c/w^2` tail
    /// is subtracted as `c/(1 + w^2)` and added back in closed form.
    fn brute_correlation(s: &SpectralDensity, tau: f64) -> f64 {
        let c: f64 = s.terms.iter().map(|t| t.weight).sum();
        let body = trapezoid(
            |w| (s.at(w) - c / (1.0 + w * w)) * libm::cos(w * tau),
            0.0,
            4000.0,
            4_000_000,
        ) / PI;
        body + 0.5 * c * libm::exp(-libm::fabs(tau))
    }

    fn p(nbar: f64) -> SystemParams {
        SystemParams::baseline(nbar)
    }

    #[test]
    fn normal_order_is_symmetric_minus_floor() {
        for nbar in [0.0, 0.2] {
            let params = p(nbar);
            for q in [Quadrature::X, Quadrature::Y] {
                let s = normal_ordered_spectrum(&params, q).unwrap();
                for w in [0.0, 0.7, 3.0, 40.0] {
                    let expect = crate::model::wigner_spectrum(&params, q, w).unwrap() - 0.25;
                    assert!((s.at(w) - expect).abs() < 1e-12, "{q:?} {w}");
                }
            }
        }
    }

    #[test]
    fn vacuum_flux_closed_form() {
        let params = p(0.0);
        let lam: f64 = 0.4;
        let f = output_flux(&params).unwrap();
        assert!((f - lam * lam / (1.0 - lam * lam)).abs() < 1e-12);
        let m = intracavity_moments(&params).unwrap();
        assert!((m.photon_number - lam * lam / (2.0 * (1.0 - lam * lam))).abs() < 1e-12);
        assert!((2.0 * m.photon_number - f).abs() < 1e-12);
        assert!((m.y2 - 1.0 / 5.6).abs() < 1e-12);
    }

    #[test]
    fn flux_is_twice_photon_number_with_noise() {
        for nbar in [0.05, 0.2] {
            let params = p(nbar);
            let f = output_flux(&params).unwrap();
            let n = intracavity_moments(&params).unwrap().photon_number;
            // Output flux = 2 kappa <a^dag a> + input flux + interference;
            // check it against a direct frequency quadrature instead.
            let sx = normal_ordered_spectrum(&params, Quadrature::X).unwrap();
            let sy = normal_ordered_spectrum(&params, Quadrature::Y).unwrap();
            let direct = brute_correlation(&sx.plus(&sy), 0.0);
            assert!((f - direct).abs() < 1e-6 * f, "{f} {direct}");
            assert!(n > 0.0);
        }
    }

    #[test]
    fn flux_monotone_in_noise() {
        let f0 = output_flux(&p(0.0)).unwrap();
        let f1 = output_flux(&p(0.1)).unwrap();
        let f2 = output_flux(&p(0.2)).unwrap();
        assert!(f2 > f1 && f1 > f0 && f0 > 0.0);
    }

    #[test]
    fn pump_off_calibration() {
        for nbar in [0.05, 0.1, 0.2] {
            let params = SystemParams {
                lambda_pump: 0.0,
                ..p(nbar)
            };
            let m = intracavity_moments_with(&params, InputNoise::from_params(&params), false).unwrap();
            assert!((m.photon_number - nbar).abs() < 1e-12 * nbar.max(1.0));
        }
    }

    #[test]
    fn no_pump_no_noise_is_undefined() {
        let params = SystemParams {
            lambda_pump: 0.0,
            ..p(0.0)
        };
        assert_eq!(output_flux(&params).unwrap(), 0.0);
        assert_eq!(normal_ordered_y_correlation(&params, 0.3).unwrap(), 0.0);
        assert!(matches!(oracle_h_y(&params, &[0.0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn y_correlation_matches_quadrature() {
        let params = p(0.2);
        let s = normal_ordered_spectrum(&params, Quadrature::Y).unwrap();
        for tau in [0.0, 0.05, 0.4, 1.5] {
            let exact = normal_ordered_y_correlation(&params, tau).unwrap();
            let brute = brute_correlation(&s, tau);
            assert!(
                (exact - brute).abs() < 1e-6 * exact.abs().max(1e-3),
                "{tau}: {exact} {brute}"
            );
        }
    }

    #[test]
    fn vacuum_y_correlation_is_nonpositive_and_even() {
        let params = p(0.0);
        let g0 = normal_ordered_y_correlation(&params, 0.0).unwrap();
        assert!((g0 + 0.4 / (2.0 * 1.4)).abs() < 1e-12);
        for i in 0..200 {
            let t = i as f64 * 0.05;
            let g = normal_ordered_y_correlation(&params, t).unwrap();
            assert!(g <= 0.0);
            assert_eq!(g, normal_ordered_y_correlation(&params, -t).unwrap());
        }
        assert!(normal_ordered_y_correlation(&params, 60.0).unwrap().abs() < 1e-30);
    }

    #[test]
    fn h_y_integral_is_zero_frequency_weight() {
        for nbar in [0.0, 0.2] {
            let params = p(nbar);
            let f = output_flux(&params).unwrap();
            let s0 = normal_ordered_spectrum(&params, Quadrature::Y).unwrap().at(0.0);
            let step = 2e-4;
            let taus: std::vec::Vec<f64> = (0..=400_000).map(|i| -40.0 + i as f64 * step).collect();
            for h in [
                oracle_h_y_ideal(&params, &taus).unwrap(),
                oracle_h_y(&params, &taus).unwrap(),
            ] {
                let n = h.mean.len();
                let integral =
                    step * (h.mean.iter().map(|m| m - 1.0).sum::<f64>() - 0.5 * (h.mean[0] + h.mean[n - 1] - 2.0));
                assert!(
                    (integral - s0 / f).abs() < 1e-6 * (s0 / f).abs(),
                    "{integral} {}",
                    s0 / f
                );
            }
        }
    }

    #[test]
    fn h_y_shapes() {
        let taus = vec![-3.0, -0.1, 0.0, 0.1, 3.0];
        let vac = oracle_h_y(&p(0.0), &taus).unwrap();
        let noisy = oracle_h_y(&p(0.2), &taus).unwrap();
        assert!(vac.mean.iter().all(|&h| h <= 1.0));
        assert!(vac.mean[2] < vac.mean[1] && vac.mean[2] < vac.mean[3]);
        // Classical noise adds a positive peak at zero lag.
        assert!(noisy.mean[2] > noisy.mean[1] && noisy.mean[2] > noisy.mean[3]);
        assert!((noisy.mean[4] - 1.0).abs() < 0.05);
        assert!(vac.stderr.iter().all(|&s| s == 0.0));
        let far = oracle_h_y(&p(0.2), &[200.0]).unwrap();
        assert!((far.mean[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matched_offset_reduces_to_ideal_for_fast_detector() {
        let params = SystemParams { bd: 1e5, ..p(0.1) };
        let taus = [0.0, 0.2, 1.0];
        let filtered = oracle_h_y(&params, &taus).unwrap();
        let ideal = oracle_h_y_ideal(&params, &taus).unwrap();
        for i in 0..3 {
            assert!((filtered.mean[i] - ideal.mean[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn offset_invariant_excess() {
        let params = p(0.1);
        let f = output_flux(&params).unwrap();
        let taus = [-0.5, 0.0, 0.3];
        let reference = chd_prediction(&params, f, &taus).unwrap();
        for off in [0.01, 1.0, 100.0] {
            let h = chd_prediction(&params, off, &taus).unwrap();
            for i in 0..3 {
                let a = (h.mean[i] - 1.0) * (off + f);
                let b = (reference.mean[i] - 1.0) * 2.0 * f;
                assert!((a - b).abs() < 1e-12 * b.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn shot_noise_autocorrelation() {
        let params = SystemParams {
            lambda_pump: 0.0,
            ..p(0.0)
        };
        let taus = [0.0, 0.01, -0.1];
        let c = oracle_current_autocorrelation(&params, &taus).unwrap();
        for (i, &t) in taus.iter().enumerate() {
            let expect = 12.5 * libm::exp(-25.0 * libm::fabs(t));
            assert!((c.mean[i] - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn noise_raises_current_spike() {
        let c0 = oracle_current_autocorrelation(&p(0.0), &[0.0]).unwrap().mean[0];
        let c2 = oracle_current_autocorrelation(&p(0.2), &[0.0]).unwrap().mean[0];
        assert!(c2 > c0);
        let far = oracle_current_autocorrelation(&p(0.2), &[100.0]).unwrap().mean[0];
        assert!(far.abs() < 1e-30);
    }
}
