//! Output quadrature spectra of the DPO for classical and Wigner-represented
//! input noise.

use alloc::vec::Vec;

use super::lorentzian::SpectralDensity;
use super::params::SystemParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Antisqueezed, in phase with the pump-amplified field.
    X,
    /// Squeezed.
    Y,
}

/// Photon-number spectral density of the field entering the DPO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputNoise {
    /// `nbar` photons per mode at every frequency.
    Flat(f64),
    /// Output of a one-sided filter cavity: `peak * rate^2 / (rate^2 + omega^2)`.
    FilterCavity { peak: f64, rate: f64 },
}

impl InputNoise {
    /// Filter-cavity noise calibrated so the pump-off intracavity photon
    /// number equals `params.nbar_a`.
    pub fn from_params(params: &SystemParams) -> Self {
        InputNoise::FilterCavity {
            peak: params.nbar_a * (1.0 + params.bc) / params.bc,
            rate: params.noise_rate(),
        }
    }

    pub fn at(&self, omega: f64) -> f64 {
        match *self {
            InputNoise::Flat(n) => n,
            InputNoise::FilterCavity { peak, rate } => peak * rate * rate / (rate * rate + omega * omega),
        }
    }

    pub fn density(&self) -> SpectralDensity {
        match *self {
            InputNoise::Flat(n) => SpectralDensity::white(n),
            InputNoise::FilterCavity { peak, rate } => SpectralDensity::lorentzian(peak * rate * rate, rate),
        }
    }
}

/// Which ordering of field operators the spectrum represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Classical,
    Wigner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// `([k(1+l)]^2 + w^2) / ([k(1-l)]^2 + w^2)` for X, the reciprocal for Y.
fn lorentz_ratio(params: &SystemParams, quadrature: Quadrature, omega: f64) -> f64 {
    let plus = params.squeezed_rate();
    let minus = params.antisqueezed_rate();
    let w2 = omega * omega;
    match quadrature {
        Quadrature::X => (plus * plus + w2) / (minus * minus + w2),
        Quadrature::Y => (minus * minus + w2) / (plus * plus + w2),
    }
}

/// Classical spectrum for the filter-cavity noise calibrated from `params`.
pub fn classical_spectrum(params: &SystemParams, quadrature: Quadrature, omega: f64) -> Result<f64> {
    classical_spectrum_with(params, InputNoise::from_params(params), quadrature, omega)
}

pub fn classical_spectrum_with(
    params: &SystemParams,
    noise: InputNoise,
    quadrature: Quadrature,
    omega: f64,
) -> Result<f64> {
    params.validate()?;
    Ok(noise.at(omega) * 0.5 * lorentz_ratio(params, quadrature, omega))
}

/// Symmetric-order spectrum: the classical one with half a photon of vacuum
/// noise added per mode.
pub fn wigner_spectrum(params: &SystemParams, quadrature: Quadrature, omega: f64) -> Result<f64> {
    wigner_spectrum_with(params, InputNoise::from_params(params), quadrature, omega)
}

pub fn wigner_spectrum_with(
    params: &SystemParams,
    noise: InputNoise,
    quadrature: Quadrature,
    omega: f64,
) -> Result<f64> {
    params.validate()?;
    Ok((noise.at(omega) + 0.5) * 0.5 * lorentz_ratio(params, quadrature, omega))
}

pub fn spectrum_curve(
    params: &SystemParams,
    noise: InputNoise,
    quadrature: Quadrature,
    kind: SpectrumKind,
    omega_grid: &[f64],
) -> Result<SpectrumCurve> {
    if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "omega_grid",
            f64::NAN,
            "strictly increasing frequency grid",
        ));
    }
    let values = omega_grid
        .iter()
        .map(|&w| match kind {
            SpectrumKind::Classical => classical_spectrum_with(params, noise, quadrature, w),
            SpectrumKind::Wigner => wigner_spectrum_with(params, noise, quadrature, w),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumCurve {
        omega_grid: omega_grid.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> SystemParams {
        SystemParams {
            lambda_pump: lambda,
            ..SystemParams::baseline(0.0)
        }
    }

    #[test]
    fn no_pump_is_flat() {
        for q in [Quadrature::X, Quadrature::Y] {
            for w in [0.0, 1.0, 100.0] {
                let s = classical_spectrum_with(&params(0.0), InputNoise::Flat(1.0), q, w).unwrap();
                assert_eq!(s, 0.5);
            }
        }
    }

    #[test]
    fn hand_evaluated_values() {
        let s = classical_spectrum_with(&params(0.4), InputNoise::Flat(1.0), Quadrature::Y, 0.0).unwrap();
        assert!((s - 9.0 / 98.0).abs() < 1e-15);
        let w = wigner_spectrum_with(&params(0.4), InputNoise::Flat(0.0), Quadrature::Y, 0.0).unwrap();
        assert!((w - 9.0 / 196.0).abs() < 1e-15);
        assert!(w < 0.25);
    }

    #[test]
    fn perfect_squeezing_on_resonance() {
        let near = params(1.0 - 1e-15);
        let s = classical_spectrum_with(&near, InputNoise::Flat(3.0), Quadrature::Y, 0.0).unwrap();
        assert!(s < 1e-28);
    }

    #[test]
    fn vacuum_floor_far_off_resonance() {
        let p = params(0.0);
        let noise = InputNoise::FilterCavity { peak: 1.0, rate: 15.0 };
        let s = wigner_spectrum_with(&p, noise, Quadrature::X, 1e9).unwrap();
        assert!((s - 0.25).abs() < 1e-12);
    }

    #[test]
    fn calibrated_noise_is_used_by_default() {
        let p = SystemParams::baseline(0.2);
        let n0 = InputNoise::from_params(&p).at(0.0);
        assert!((n0 - 0.2 * 16.0 / 15.0).abs() < 1e-15);
        let s = classical_spectrum(&p, Quadrature::Y, 0.0).unwrap();
        assert!((s - n0 * 9.0 / 98.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_rejected() {
        let p = SystemParams {
            lambda_pump: 1.0,
            ..params(0.0)
        };
        assert!(classical_spectrum_with(&p, InputNoise::Flat(1.0), Quadrature::X, 0.0).is_err());
    }

    #[test]
    fn curve_requires_increasing_grid() {
        let p = params(0.4);
        let bad = spectrum_curve(
            &p,
            InputNoise::Flat(1.0),
            Quadrature::Y,
            SpectrumKind::Classical,
            &[0.0, 0.0],
        );
        assert!(bad.is_err());
        let ok = spectrum_curve(
            &p,
            InputNoise::Flat(1.0),
            Quadrature::Y,
            SpectrumKind::Wigner,
            &[0.0, 1.0],
        )
        .unwrap();
        assert_eq!(ok.values.len(), 2);
        assert!(ok.values.iter().all(|&v| v >= 0.0));
    }
}
