//! Stochastic simulation of squeezed-light detection.
//!
//! A below-threshold degenerate parametric oscillator (DPO) squeezes a
//! finite-bandwidth classical noise field. The crate compares three views of
//! its output:
//!
//! * [`model`]: closed-form quadrature spectra and Gaussian-moment
//!   predictions for every measured correlation function;
//! * [`trajectory`]: quantum trajectories of the DPO mode, unravelled either
//!   as balanced homodyne detection or as conditional homodyne detection
//!   (diffusive homodyne channel plus a photon-counting "start" channel);
//! * [`sed`]: a purely classical field network in which vacuum fluctuations
//!   are injected as real noise (stochastic electrodynamics).
//!
//! [`noise`] holds the seeded random-process machinery and [`estimators`]
//! the lag-binned correlation estimators shared by all experiments.
//!
//! The crate is `no_std` and needs only `alloc`. Units: the cavity decay
//! rate `kappa` sets the time unit and fields are photon-flux amplitudes in
//! the frame rotating at the cavity resonance.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimators;
mod math;
pub mod model;
pub mod noise;
pub mod sed;
pub mod trajectory;

pub use error::{Error, Result};
pub use estimators::{CorrelationEstimate, LagAccumulator, TauGrid};
pub use model::{DetectionConfig, Quadrature, SystemParams};
pub use num_complex::Complex64;
