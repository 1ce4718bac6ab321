//! `f64` intrinsics routed through `libm` so the crate builds without `std`.

use num_complex::Complex64;

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `exp(i phase)`.
#[inline]
pub(crate) fn phasor(phase: f64) -> Complex64 {
    Complex64::new(libm::cos(phase), libm::sin(phase))
}

/// Quadrature of `z` selected by `phase`: `Re(z exp(-i phase))`.
/// Phase 0 picks X, phase pi/2 picks Y.
#[inline]
pub(crate) fn quadrature(z: Complex64, phase: f64) -> f64 {
    let (s, c) = (libm::sin(phase), libm::cos(phase));
    z.re * c + z.im * s
}
