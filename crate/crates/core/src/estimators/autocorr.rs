use alloc::vec::Vec;

use super::lag::LagSums;
use super::{CorrelationEstimate, TauGrid};
use crate::error::{Error, Result};
use crate::math::{ceil, sqrt};
use crate::noise::NoiseStream;

pub const BOOTSTRAP_REPLICATES: usize = 200;

/// Fewest blocks the bootstrap will resample from.
const MIN_BLOCKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrOptions {
    /// Block length in samples; by default ten integrated autocorrelation
    /// times of the series.
    pub block_len: Option<usize>,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for AutocorrOptions {
    fn default() -> Self {
        AutocorrOptions {
            block_len: None,
            replicates: BOOTSTRAP_REPLICATES,
            seed: 0,
        }
    }
}

/// Integrated autocorrelation time of `series` in samples,
/// `1 + 2 sum_k rho_k`, summed up to the first lag `k >= 5 tau(k)`.
pub fn integrated_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if !(c0 > 0.0) {
        return 1.0;
    }
    let mut tau = 1.0;
    for k in 1..n / 2 {
        let ck = series[..n - k]
            .iter()
            .zip(&series[k..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64;
        tau += 2.0 * ck / c0;
        if k as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Stationary autocorrelation `mean[x(t) x(t + tau)]` of a sampled real
/// signal (interval `dt`), skipping the first `transient_skip` samples.
/// Every lag averages over the same base times, and `-tau` shares the
/// products of `+tau`. Errors come from a non-overlapping block bootstrap.
pub fn autocorrelate(series: &[f64], grid: &TauGrid, dt: f64, transient_skip: usize) -> Result<CorrelationEstimate> {
    autocorrelate_with(series, grid, dt, transient_skip, AutocorrOptions::default())
}

pub fn autocorrelate_with(
    series: &[f64],
    grid: &TauGrid,
    dt: f64,
    transient_skip: usize,
    options: AutocorrOptions,
) -> Result<CorrelationEstimate> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", dt, "dt > 0"));
    }
    let offsets = grid.sample_offsets(dt);
    let max_off = offsets[offsets.len() - 1] as usize;
    let needed = transient_skip + max_off + MIN_BLOCKS;
    if series.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            have: series.len(),
        });
    }
    let base = &series[transient_skip..];
    let usable = base.len() - max_off;
    let block = match options.block_len {
        Some(b) => b.max(1),
        None => 10 * ceil(integrated_time(&base[..usable])) as usize,
    };
    let n_blocks = usable / block;
    if n_blocks < MIN_BLOCKS {
        return Err(Error::InsufficientData {
            needed: transient_skip + max_off + MIN_BLOCKS * block,
            have: series.len(),
        });
    }
    let center = grid.center();
    let lags = &offsets[center..];
    // Per-block sums of lag products, block-major.
    let nl = lags.len();
    let mut block_sums = alloc::vec![0.0; n_blocks * nl];
    for b in 0..n_blocks {
        let row = &mut block_sums[b * nl..(b + 1) * nl];
        for t in b * block..(b + 1) * block {
            let x = base[t];
            for (l, &o) in lags.iter().enumerate() {
                row[l] += x * base[t + o as usize];
            }
        }
    }
    let samples = (n_blocks * block) as f64;
    let mut mean = alloc::vec![0.0; nl];
    for b in 0..n_blocks {
        for l in 0..nl {
            mean[l] += block_sums[b * nl + l];
        }
    }
    for m in mean.iter_mut() {
        *m /= samples;
    }
    let mut stream = NoiseStream::new(options.seed, 0);
    let mut acc = alloc::vec![0.0; nl];
    let mut acc_sq = alloc::vec![0.0; nl];
    let mut rep = alloc::vec![0.0; nl];
    let reps = options.replicates.max(2);
    for _ in 0..reps {
        rep.iter_mut().for_each(|r| *r = 0.0);
        for _ in 0..n_blocks {
            let b = (stream.uniform() * n_blocks as f64) as usize;
            for l in 0..nl {
                rep[l] += block_sums[b * nl + l];
            }
        }
        for l in 0..nl {
            let r = rep[l] / samples;
            acc[l] += r;
            acc_sq[l] += r * r;
        }
    }
    let rf = reps as f64;
    let se: Vec<f64> = (0..nl)
        .map(|l| {
            let m = acc[l] / rf;
            sqrt((acc_sq[l] / rf - m * m).max(0.0) * rf / (rf - 1.0))
        })
        .collect();
    let n = grid.len();
    let pick = |i: usize| i.abs_diff(center);
    Ok(CorrelationEstimate {
        tau: grid.points(),
        mean: (0..n).map(|i| mean[pick(i)]).collect(),
        stderr: (0..n).map(|i| se[pick(i)]).collect(),
        count: alloc::vec![(n_blocks * block) as u64; n],
    })
}

/// Lag-product sums of one trajectory's series for ensemble pooling. Base
/// times run from `start` in steps of `stride` while `t + tau_max` stays in
/// the series; `-tau` bins reuse the `+tau` products. `triggers` counts base
/// times.
pub fn autocorrelation_sums(series: &[f64], grid: &TauGrid, dt: f64, start: usize, stride: usize) -> Result<LagSums> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", dt, "dt > 0"));
    }
    let stride = stride.max(1);
    let offsets = grid.sample_offsets(dt);
    let center = grid.center();
    let max_off = offsets[offsets.len() - 1] as usize;
    if series.len() <= start + max_off {
        return Err(Error::InsufficientData {
            needed: start + max_off + 1,
            have: series.len(),
        });
    }
    let n = grid.len();
    let mut sums = LagSums::new(n);
    let mut t = start;
    while t + max_off < series.len() {
        let x = series[t];
        for i in center..n {
            let p = x * series[t + offsets[i] as usize];
            sums.add(i, p);
            if i != center {
                sums.add(2 * center - i, p);
            }
        }
        sums.triggers += 1;
        t += stride;
    }
    sums.exposure = sums.triggers as f64 * stride as f64 * dt;
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(seed: u64, n: usize, rate: f64, dt: f64) -> Vec<f64> {
        let mut s = NoiseStream::new(seed, 0);
        let decay = libm::exp(-rate * dt);
        let kick = libm::sqrt(1.0 - decay * decay);
        let mut x = s.standard_normal();
        (0..n)
            .map(|_| {
                x = x * decay + kick * s.standard_normal();
                x
            })
            .collect()
    }

    #[test]
    fn white_series_uncorrelated_at_nonzero_lag() {
        let mut s = NoiseStream::new(21, 0);
        let x: Vec<f64> = (0..200_000).map(|_| s.standard_normal()).collect();
        let g = TauGrid::new(0.05, 11);
        let est = autocorrelate(&x, &g, 0.01, 0).unwrap();
        for i in 0..11 {
            if i == 5 {
                assert!((est.mean[i] - 1.0).abs() < 3.0 * est.stderr[i]);
            } else {
                assert!(est.mean[i].abs() < 3.0 * est.stderr[i], "{i}");
            }
        }
    }

    #[test]
    fn ar1_decays_exponentially() {
        let (rate, dt) = (2.0, 0.01);
        let x = ar1(22, 400_000, rate, dt);
        let g = TauGrid::new(1.0, 11);
        let est = autocorrelate(&x, &g, dt, 100).unwrap();
        for i in 0..11 {
            let expect = libm::exp(-rate * libm::fabs(est.tau[i]));
            assert!(
                (est.mean[i] - expect).abs() < 3.0 * est.stderr[i],
                "{i}: {} {expect}",
                est.mean[i]
            );
            assert_eq!(est.mean[i], est.mean[10 - i]);
        }
    }

    #[test]
    fn constant_series() {
        let x = alloc::vec![1.5; 5000];
        let est = autocorrelate(&x, &TauGrid::new(0.1, 5), 0.01, 10).unwrap();
        assert!(est.mean.iter().all(|&m| (m - 2.25).abs() < 1e-12));
        assert!(est.stderr.iter().all(|&s| s < 1e-9));
    }

    #[test]
    fn too_short_series() {
        let x = alloc::vec![0.0; 50];
        assert!(matches!(
            autocorrelate(&x, &TauGrid::new(1.0, 5), 0.01, 0),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn integrated_time_of_ar1() {
        let (rate, dt) = (2.0, 0.01);
        let x = ar1(23, 400_000, rate, dt);
        let d = libm::exp(-rate * dt);
        let expect = (1.0 + d) / (1.0 - d);
        let got = integrated_time(&x);
        assert!((got / expect - 1.0).abs() < 0.15, "{got} {expect}");
    }

    /// Bootstrap errors track the spread over independent replicas.
    #[test]
    fn bootstrap_error_is_calibrated() {
        let (rate, dt) = (2.0, 0.01);
        let g = TauGrid::new(0.4, 5);
        let mut values = Vec::new();
        let mut errors = Vec::new();
        for seed in 0..10 {
            let x = ar1(100 + seed, 100_000, rate, dt);
            let est = autocorrelate(&x, &g, dt, 0).unwrap();
            values.push(est.mean[3]);
            errors.push(est.stderr[3]);
        }
        let m = values.iter().sum::<f64>() / 10.0;
        let spread = libm::sqrt(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 9.0);
        let typical = errors.iter().sum::<f64>() / 10.0;
        assert!(typical / spread < 2.0 && spread / typical < 2.0, "{typical} {spread}");
    }

    #[test]
    fn sums_mirror_and_count() {
        let x: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let g = TauGrid::new(0.02, 5);
        let sums = autocorrelation_sums(&x, &g, 0.01, 10, 3).unwrap();
        assert_eq!(sums.sum[0], sums.sum[4]);
        assert_eq!(sums.count[2], sums.triggers);
        let expected: f64 = (10..98).step_by(3).map(|t| (t * (t + 2)) as f64).sum();
        assert_eq!(sums.sum[4], expected);
    }
}
