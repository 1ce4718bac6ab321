//! Domain types and closed-form predictions.

mod lorentzian;
mod oracle;
mod params;
mod spectra;

pub use lorentzian::{Lorentzian, SpectralDensity};
pub use oracle::{
    chd_prediction, current_spectrum, intracavity_moments, intracavity_moments_with, matched_offset_amplitude,
    normal_ordered_spectrum, normal_ordered_spectrum_with, normal_ordered_y_correlation,
    oracle_current_autocorrelation, oracle_h_y, oracle_h_y_ideal, output_flux, IntracavityMoments,
};
pub use params::{DetectionConfig, SystemParams, DEFAULT_WIDE_DETECTION_FACTOR};
pub use spectra::{
    classical_spectrum, classical_spectrum_with, spectrum_curve, wigner_spectrum, wigner_spectrum_with, InputNoise,
    Quadrature, SpectrumCurve, SpectrumKind,
};
