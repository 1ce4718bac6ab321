//! Lag-binned correlation estimators with exactly mergeable sums.

mod autocorr;
mod exact;
mod lag;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::round;

pub use autocorr::{
    autocorrelate, autocorrelate_with, autocorrelation_sums, integrated_time, AutocorrOptions, BOOTSTRAP_REPLICATES,
};
pub use exact::{jackknife, Batched, ExactSum, Merge};
pub use lag::{
    merge, normalize_h, normalize_h_ensemble, tail_bins, tail_normalize, triggered_average, LagAccumulator, LagSums,
    NormalizeMode, DEFAULT_TAIL_FRACTION,
};

/// Symmetric lag grid `-tau_max ..= tau_max` with an odd number of points,
/// so `tau = 0` is always a bin center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    tau_max: f64,
    n: usize,
}

impl TauGrid {
    /// Panics unless `n` is odd and at least 3 and `tau_max > 0`; use
    /// [`TauGrid::checked`] for untrusted input.
    pub fn new(tau_max: f64, n: usize) -> Self {
        Self::checked(tau_max, n).expect("invalid tau grid")
    }

    pub fn checked(tau_max: f64, n: usize) -> Result<Self> {
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return Err(Error::invalid("tau_max", tau_max, "tau_max > 0"));
        }
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::invalid("n_tau", n as f64, "n_tau odd and >= 3"));
        }
        Ok(TauGrid { tau_max, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    /// Bin width `2 tau_max / (n - 1)`.
    pub fn step(&self) -> f64 {
        2.0 * self.tau_max / (self.n - 1) as f64
    }

    /// Index of the `tau = 0` bin.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn tau(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * 2.0 * self.tau_max / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.tau(i)).collect()
    }

    /// Nearest bin for a lag, or `None` outside the grid.
    pub fn bin_of(&self, tau: f64) -> Option<usize> {
        let k = round(tau / self.step()) + self.center() as f64;
        if k >= 0.0 && k < self.n as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Sample offsets nearest to each grid lag for sampling interval `dt`.
    pub fn sample_offsets(&self, dt: f64) -> Vec<isize> {
        (0..self.n).map(|i| round(self.tau(i) / dt) as isize).collect()
    }
}

/// Width, in detection times `1/(B_d kappa)`, of the window used to measure
/// the narrow feature at `tau = 0`.
pub const SPIKE_WIDTH_DETECTION_TIMES: f64 = 5.0;

/// Grid bins between `tau = 0` and the lag nearest `width`.
fn spike_reach(grid: &TauGrid, width: f64) -> Result<usize> {
    let k = round(width / grid.step()) as usize;
    if !(width > 0.0) || k == 0 || k > grid.center() {
        return Err(Error::invalid(
            "spike width",
            width,
            "0 < width <= tau_max, at least one grid step",
        ));
    }
    Ok(k)
}

/// Height of the narrow feature at `tau = 0` above the curve around it,
/// `c(0) - (c(-w) + c(w))/2` with `w` the grid lag nearest `width`.
pub fn spike_amplitude(curve: &[f64], grid: &TauGrid, width: f64) -> Result<f64> {
    let k = spike_reach(grid, width)?;
    let c = grid.center();
    if curve.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    Ok(curve[c] - 0.5 * (curve[c - k] + curve[c + k]))
}

/// [`spike_amplitude`] of a batched curve with its jackknife error.
pub fn spike_estimate<T: Merge>(
    batched: &Batched<T>,
    grid: &TauGrid,
    width: f64,
    curve: impl Fn(&T) -> Result<Vec<f64>>,
) -> Result<(f64, f64)> {
    let (m, se) = jackknife(batched, |t| Ok(alloc::vec![spike_amplitude(&curve(t)?, grid, width)?]))?;
    Ok((m[0], se[0]))
}

/// A correlation function on a lag grid with per-bin standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub tau: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Samples behind each bin; 1 for closed-form curves.
    pub count: Vec<u64>,
}

impl CorrelationEstimate {
    /// A closed-form curve: zero standard error.
    pub fn deterministic(taus: &[f64], values: impl Iterator<Item = f64>) -> Self {
        let mean: Vec<f64> = values.collect();
        debug_assert_eq!(mean.len(), taus.len());
        CorrelationEstimate {
            tau: taus.to_vec(),
            stderr: alloc::vec![0.0; mean.len()],
            count: alloc::vec![1; mean.len()],
            mean,
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Largest `|self - other| / stderr` over bins with nonzero error.
    pub fn max_z(&self, other: &CorrelationEstimate) -> f64 {
        self.mean
            .iter()
            .zip(&other.mean)
            .zip(self.stderr.iter().zip(&other.stderr))
            .map(|((a, b), (sa, sb))| {
                let s = crate::math::sqrt(sa * sa + sb * sb);
                if s > 0.0 {
                    crate::math::abs(a - b) / s
                } else if a == b {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = TauGrid::new(4.0, 81);
        assert_eq!(g.center(), 40);
        assert!((g.step() - 0.1).abs() < 1e-15);
        assert_eq!(g.tau(40), 0.0);
        assert_eq!(g.tau(0), -4.0);
        assert_eq!(g.tau(80), 4.0);
        assert_eq!(g.bin_of(0.04), Some(40));
        assert_eq!(g.bin_of(-0.06), Some(39));
        assert_eq!(g.bin_of(4.2), None);
        let off = g.sample_offsets(0.002);
        assert_eq!(off[40], 0);
        assert_eq!(off[41], 50);
        assert_eq!(off[0], -2000);
        assert!(TauGrid::checked(1.0, 4).is_err());
        assert!(TauGrid::checked(0.0, 5).is_err());
    }

    #[test]
    fn spike_of_a_tent() {
        let g = TauGrid::new(1.0, 21);
        let curve: Vec<f64> = g.points().iter().map(|t| 1.0 - t.abs()).collect();
        assert!((spike_amplitude(&curve, &g, 0.2).unwrap() - 0.2).abs() < 1e-12);
        assert!(spike_amplitude(&curve, &g, 0.01).is_err());
        assert!(spike_amplitude(&curve, &g, 1.5).is_err());
        assert_eq!(spike_amplitude(&curve[1..], &g, 0.2), Err(Error::GridMismatch));
    }

    #[test]
    fn grid_is_symmetric() {
        let g = TauGrid::new(2.5, 11);
        let p = g.points();
        for i in 0..p.len() {
            assert_eq!(p[i], -p[p.len() - 1 - i]);
        }
    }
}
