use alloc::vec::Vec;

use super::exact::{jackknife, Batched, ExactSum, Merge};
use super::{CorrelationEstimate, TauGrid};
use crate::error::{Error, Result};
use crate::math::{abs, ceil, round, sqrt};

/// Fraction of bins (both tails together) used as the `tau -> +-inf`
/// plateau by [`NormalizeMode::TailWindow`].
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

/// Pooled per-bin sums of sampled values, plus the bookkeeping needed to
/// turn triggered sums into rates.
#[derive(Debug, Clone, PartialEq)]
pub struct LagAccumulator {
    grid: TauGrid,
    pub sum: Vec<ExactSum>,
    pub sum_sq: Vec<ExactSum>,
    pub count: Vec<u64>,
    /// Observation time during which a trigger would have been accepted.
    pub exposure: ExactSum,
    pub triggers: u64,
    /// Triggers too close to a buffer edge to be sampled at every lag.
    pub dropped: u64,
}

/// Plain `f64` sums for one trajectory, folded into a [`LagAccumulator`]
/// once the trajectory ends.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSums {
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub count: Vec<u64>,
    pub exposure: f64,
    pub triggers: u64,
    pub dropped: u64,
}

impl LagSums {
    pub fn new(n: usize) -> Self {
        LagSums {
            sum: alloc::vec![0.0; n],
            sum_sq: alloc::vec![0.0; n],
            count: alloc::vec![0; n],
            exposure: 0.0,
            triggers: 0,
            dropped: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, bin: usize, value: f64) {
        self.sum[bin] += value;
        self.sum_sq[bin] += value * value;
        self.count[bin] += 1;
    }
}

impl LagAccumulator {
    pub fn new(grid: TauGrid) -> Self {
        let n = grid.len();
        LagAccumulator {
            grid,
            sum: alloc::vec![ExactSum::ZERO; n],
            sum_sq: alloc::vec![ExactSum::ZERO; n],
            count: alloc::vec![0; n],
            exposure: ExactSum::ZERO,
            triggers: 0,
            dropped: 0,
        }
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn add_sample(&mut self, bin: usize, value: f64) {
        self.sum[bin].add(value);
        self.sum_sq[bin].add(value * value);
        self.count[bin] += 1;
    }

    pub fn record(&mut self, sums: &LagSums) -> Result<()> {
        if sums.sum.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        for i in 0..self.grid.len() {
            self.sum[i].add(sums.sum[i]);
            self.sum_sq[i].add(sums.sum_sq[i]);
            self.count[i] += sums.count[i];
        }
        self.exposure.add(sums.exposure);
        self.triggers += sums.triggers;
        self.dropped += sums.dropped;
        Ok(())
    }

    pub fn from_sums(grid: TauGrid, sums: &LagSums) -> Result<Self> {
        let mut acc = LagAccumulator::new(grid);
        acc.record(sums)?;
        Ok(acc)
    }

    /// Per-bin means; bins without samples give `NaN`.
    pub fn means(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                if self.count[i] == 0 {
                    f64::NAN
                } else {
                    self.sum[i].value() / self.count[i] as f64
                }
            })
            .collect()
    }

    /// Per-bin standard error assuming independent samples.
    pub fn naive_stderr(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                let n = self.count[i] as f64;
                if self.count[i] < 2 {
                    return f64::INFINITY;
                }
                let m = self.sum[i].value() / n;
                let var = (self.sum_sq[i].value() / n - m * m).max(0.0) * n / (n - 1.0);
                sqrt(var / n)
            })
            .collect()
    }

    fn estimate(&self, mean: Vec<f64>, stderr: Vec<f64>) -> CorrelationEstimate {
        CorrelationEstimate {
            tau: self.grid.points(),
            mean,
            stderr,
            count: self.count.clone(),
        }
    }
}

impl Merge for LagAccumulator {
    fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        for i in 0..self.grid.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.count[i] += other.count[i];
        }
        self.exposure += other.exposure;
        self.triggers += other.triggers;
        self.dropped += other.dropped;
        Ok(())
    }
}

/// Exact pooled sums of two accumulators on the same grid.
pub fn merge(a: &LagAccumulator, b: &LagAccumulator) -> Result<LagAccumulator> {
    let mut out = a.clone();
    out.merge_from(b)?;
    Ok(out)
}

/// Samples `buffer` (interval `dt`, sample `k` at time `k dt`) at every grid
/// lag around each trigger, at the nearest sample. Triggers whose lag window
/// leaves the buffer are dropped and counted.
pub fn triggered_average(buffer: &[f64], trigger_times: &[f64], grid: &TauGrid, dt: f64) -> Result<LagAccumulator> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", dt, "dt > 0"));
    }
    let offsets = grid.sample_offsets(dt);
    let lo = offsets[0];
    let hi = offsets[offsets.len() - 1];
    let mut sums = LagSums::new(grid.len());
    for &t in trigger_times {
        let k = round(t / dt) as isize;
        if k + lo < 0 || k + hi >= buffer.len() as isize {
            sums.dropped += 1;
            continue;
        }
        sums.triggers += 1;
        for (bin, &o) in offsets.iter().enumerate() {
            sums.add(bin, buffer[(k + o) as usize]);
        }
    }
    let span = buffer.len() as isize - (hi - lo);
    sums.exposure = span.max(0) as f64 * dt;
    LagAccumulator::from_sums(*grid, &sums)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizeMode {
    /// Divide by the mean over the outermost bins (`fraction` of all bins).
    TailWindow { fraction: f64 },
    /// Divide by the expected trigger count `expected_rate * exposure` and
    /// the expected mean signal `baseline`.
    ModelFlux { expected_rate: f64, baseline: f64 },
}

impl Default for NormalizeMode {
    fn default() -> Self {
        NormalizeMode::TailWindow {
            fraction: DEFAULT_TAIL_FRACTION,
        }
    }
}

/// Number of tail bins on each side: `ceil(fraction * n / 2)`.
pub fn tail_bins(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0) {
        return Err(Error::EmptyTail);
    }
    let k = ceil(fraction * n as f64 / 2.0) as usize;
    if k == 0 || 2 * k >= n {
        return Err(Error::EmptyTail);
    }
    Ok(k)
}

fn h_values(acc: &LagAccumulator, mode: NormalizeMode) -> Result<Vec<f64>> {
    let n = acc.grid.len();
    match mode {
        NormalizeMode::TailWindow { fraction } => {
            let k = tail_bins(n, fraction)?;
            let (mut s, mut c) = (ExactSum::ZERO, 0u64);
            for i in (0..k).chain(n - k..n) {
                s += acc.sum[i];
                c += acc.count[i];
            }
            if c == 0 {
                return Err(Error::EmptyTail);
            }
            let tail = s.value() / c as f64;
            if !(abs(tail) > 0.0) {
                return Err(Error::VanishingDenominator("tail mean"));
            }
            Ok(acc.means().into_iter().map(|m| m / tail).collect())
        }
        NormalizeMode::ModelFlux {
            expected_rate,
            baseline,
        } => {
            let denom = expected_rate * acc.exposure.value() * baseline;
            if !(abs(denom) > 0.0) {
                return Err(Error::VanishingDenominator("expected trigger count times baseline"));
            }
            Ok(acc.sum.iter().map(|s| s.value() / denom).collect())
        }
    }
}

/// Unit-baseline `h(tau)` from one accumulator. Errors assume independent
/// samples within each bin.
pub fn normalize_h(acc: &LagAccumulator, mode: NormalizeMode) -> Result<CorrelationEstimate> {
    let h = h_values(acc, mode)?;
    let means = acc.means();
    let se = acc.naive_stderr();
    let stderr = h
        .iter()
        .zip(means.iter().zip(&se))
        .map(|(&h, (&m, &s))| if m != 0.0 { abs(h / m) * s } else { f64::INFINITY })
        .collect();
    Ok(acc.estimate(h, stderr))
}

/// Unit-baseline `h(tau)` pooled over batches, with delete-one-batch
/// jackknife errors (naive errors when there is a single batch).
pub fn normalize_h_ensemble(batched: &Batched<LagAccumulator>, mode: NormalizeMode) -> Result<CorrelationEstimate> {
    let total = batched.total()?;
    if batched.batches().len() < 2 {
        return normalize_h(&total, mode);
    }
    let (h, stderr) = jackknife(batched, |acc| h_values(acc, mode))?;
    Ok(total.estimate(h, stderr))
}

/// Rescales a curve so the mean over its tail bins is one.
pub fn tail_normalize(est: &CorrelationEstimate, fraction: f64) -> Result<CorrelationEstimate> {
    let n = est.len();
    let k = tail_bins(n, fraction)?;
    let tail = (0..k).chain(n - k..n).map(|i| est.mean[i]).sum::<f64>() / (2 * k) as f64;
    if !(abs(tail) > 0.0) {
        return Err(Error::VanishingDenominator("tail mean"));
    }
    let scale = 1.0 / abs(tail);
    Ok(CorrelationEstimate {
        tau: est.tau.clone(),
        mean: est.mean.iter().map(|m| m / tail).collect(),
        stderr: est.stderr.iter().map(|s| s * scale).collect(),
        count: est.count.clone(),
    })
}
