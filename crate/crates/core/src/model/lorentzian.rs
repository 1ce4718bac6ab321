//! Rational spectral densities written as a white floor plus a sum of
//! Lorentzians `w / (c^2 + omega^2)`. Every spectrum in the model has this
//! form, so lag-domain transforms, total powers and filtered correlations are
//! evaluated in closed form.

use alloc::vec::Vec;

use crate::math::{abs, exp};

/// Poles closer than this (relative) are split apart before partial
/// fractions are taken.
const POLE_SPLIT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub weight: f64,
    pub rate: f64,
}

impl Lorentzian {
    pub fn at(&self, omega: f64) -> f64 {
        self.weight / (self.rate * self.rate + omega * omega)
    }

    /// Inverse Fourier transform over `omega/2pi`.
    pub fn correlation(&self, tau: f64) -> f64 {
        self.weight * exp(-self.rate * abs(tau)) / (2.0 * self.rate)
    }

    /// Correlation seen through a causal single-pole filter of rate `b`
    /// applied to one of the two factors: `int_0^inf b e^{-bs} C(tau - s) ds`.
    pub fn causal_filtered_correlation(&self, b: f64, tau: f64) -> f64 {
        let c = self.rate;
        let shape = if tau < 0.0 {
            b * exp(c * tau) / (b + c)
        } else if abs(b - c) <= POLE_SPLIT * b {
            b * tau * exp(-b * tau) + 0.5 * exp(-b * tau)
        } else {
            b * (exp(-c * tau) - exp(-b * tau)) / (b - c) + b * exp(-b * tau) / (b + c)
        };
        self.weight / (2.0 * c) * shape
    }
}

/// `white + sum_k w_k / (c_k^2 + omega^2)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralDensity {
    pub white: f64,
    pub terms: Vec<Lorentzian>,
}

impl SpectralDensity {
    pub fn white(level: f64) -> Self {
        SpectralDensity {
            white: level,
            terms: Vec::new(),
        }
    }

    pub fn lorentzian(weight: f64, rate: f64) -> Self {
        SpectralDensity {
            white: 0.0,
            terms: alloc::vec![Lorentzian { weight, rate }],
        }
    }

    pub fn at(&self, omega: f64) -> f64 {
        self.white + self.terms.iter().map(|t| t.at(omega)).sum::<f64>()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpectralDensity {
            white: self.white * s,
            terms: self
                .terms
                .iter()
                .map(|t| Lorentzian {
                    weight: t.weight * s,
                    rate: t.rate,
                })
                .collect(),
        }
    }

    pub fn plus(&self, other: &SpectralDensity) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        SpectralDensity {
            white: self.white + other.white,
            terms,
        }
    }

    /// Multiply by `1 / (q^2 + omega^2)`.
    pub fn times_pole(&self, q: f64) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len() + 1);
        if self.white != 0.0 {
            terms.push(Lorentzian {
                weight: self.white,
                rate: q,
            });
        }
        for t in &self.terms {
            let mut c = t.rate;
            if abs(c - q) <= POLE_SPLIT * q {
                c = q * (1.0 + POLE_SPLIT);
            }
            // w/((c^2+w^2)(q^2+w^2)) = w/(q^2-c^2) [1/(c^2+w^2) - 1/(q^2+w^2)]
            let k = t.weight / (q * q - c * c);
            terms.push(Lorentzian { weight: k, rate: c });
            terms.push(Lorentzian { weight: -k, rate: q });
        }
        SpectralDensity { white: 0.0, terms }
    }

    /// Multiply by the single-pole power response `b^2 / (b^2 + omega^2)`.
    pub fn lowpassed(&self, b: f64) -> Self {
        self.times_pole(b).scaled(b * b)
    }

    /// Lag-domain transform, excluding the `white * delta(tau)` part.
    pub fn correlation(&self, tau: f64) -> f64 {
        self.terms.iter().map(|t| t.correlation(tau)).sum()
    }

    /// `int S domega/2pi`; infinite when a white floor is present.
    pub fn total_power(&self) -> f64 {
        if self.white != 0.0 {
            return f64::INFINITY;
        }
        self.terms.iter().map(|t| t.weight / (2.0 * t.rate)).sum()
    }

    /// Cross-correlation between the raw process and a copy passed through a
    /// causal single-pole filter of rate `b`, at lag `tau` (filtered copy
    /// lagging).
    pub fn causal_filtered_correlation(&self, b: f64, tau: f64) -> f64 {
        let white = if tau >= 0.0 {
            self.white * b * exp(-b * tau)
        } else {
            0.0
        };
        white
            + self
                .terms
                .iter()
                .map(|t| t.causal_filtered_correlation(b, tau))
                .sum::<f64>()
    }
}
