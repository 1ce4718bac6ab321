use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Fixed-point scale of [`ExactSum`]: 52 fractional bits.
const SCALE: f64 = (1u64 << 52) as f64;

/// Sum of `f64` values kept in 128-bit fixed point. Addition is exact
/// integer arithmetic, so partial sums combine associatively and
/// commutatively with bit-identical results regardless of merge order.
///
/// Each added value is rounded to a multiple of `2^-52`; magnitudes up to
/// about `1e22` are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ExactSum(i128);

impl ExactSum {
    pub const ZERO: ExactSum = ExactSum(0);

    pub fn from_f64(x: f64) -> Self {
        debug_assert!(x.is_finite() && x.abs() < 1e22, "ExactSum input out of range: {x}");
        ExactSum(libm::round(x * SCALE) as i128)
    }

    pub fn add(&mut self, x: f64) {
        self.0 += Self::from_f64(x).0;
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / SCALE
    }
}

impl core::ops::Add for ExactSum {
    type Output = ExactSum;
    fn add(self, rhs: ExactSum) -> ExactSum {
        ExactSum(self.0 + rhs.0)
    }
}

impl core::ops::AddAssign for ExactSum {
    fn add_assign(&mut self, rhs: ExactSum) {
        self.0 += rhs.0;
    }
}

impl core::ops::Sub for ExactSum {
    type Output = ExactSum;
    fn sub(self, rhs: ExactSum) -> ExactSum {
        ExactSum(self.0 - rhs.0)
    }
}

/// Accumulators that pool exactly.
pub trait Merge: Clone {
    fn merge_from(&mut self, other: &Self) -> Result<()>;
}

impl Merge for ExactSum {
    fn merge_from(&mut self, other: &Self) -> Result<()> {
        *self += *other;
        Ok(())
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.iter_mut().zip(other) {
            a.merge_from(b)?;
        }
        Ok(())
    }
}

/// Trajectory results grouped into a fixed number of batches: trajectory
/// `j` goes to batch `j % batches`. Because merges are exact, the grouping
/// and hence every derived error bar is independent of scheduling.
#[derive(Debug, Clone, PartialEq)]
pub struct Batched<T> {
    batches: Vec<T>,
}

impl<T: Merge> Batched<T> {
    pub fn new(empty: T, n_batches: usize) -> Self {
        Batched {
            batches: alloc::vec![empty; n_batches.max(1)],
        }
    }

    /// Wraps already-grouped batches; batch `k` must hold exactly the
    /// trajectories `j` with `j % n == k`.
    pub fn from_batches(batches: Vec<T>) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::InsufficientData { needed: 1, have: 0 });
        }
        Ok(Batched { batches })
    }

    pub fn add(&mut self, trajectory: u64, item: &T) -> Result<()> {
        let k = (trajectory % self.batches.len() as u64) as usize;
        self.batches[k].merge_from(item)
    }

    pub fn batches(&self) -> &[T] {
        &self.batches
    }

    /// Projects every batch, keeping the grouping.
    pub fn map<U: Merge>(&self, f: impl Fn(&T) -> U) -> Batched<U> {
        Batched {
            batches: self.batches.iter().map(f).collect(),
        }
    }

    pub fn total(&self) -> Result<T> {
        let mut total = self.batches[0].clone();
        for b in &self.batches[1..] {
            total.merge_from(b)?;
        }
        Ok(total)
    }
}

impl<T: Merge> Merge for Batched<T> {
    fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.batches.len() != other.batches.len() {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.batches.iter_mut().zip(&other.batches) {
            a.merge_from(b)?;
        }
        Ok(())
    }
}

/// Delete-one-batch jackknife of a vector statistic. Returns the estimate on
/// the pooled data and its standard error. Needs at least two batches.
pub fn jackknife<T: Merge>(
    batched: &Batched<T>,
    statistic: impl Fn(&T) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = batched.batches.len();
    if b < 2 {
        return Err(Error::InsufficientData { needed: 2, have: b });
    }
    let estimate = statistic(&batched.total()?)?;
    let mut leave_out = Vec::with_capacity(b);
    for skip in 0..b {
        let mut rest: Option<T> = None;
        for (k, batch) in batched.batches.iter().enumerate() {
            if k == skip {
                continue;
            }
            match rest.as_mut() {
                None => rest = Some(batch.clone()),
                Some(r) => r.merge_from(batch)?,
            }
        }
        leave_out.push(statistic(rest.as_ref().expect("two or more batches"))?);
    }
    let bf = b as f64;
    let stderr = (0..estimate.len())
        .map(|i| {
            let m = leave_out.iter().map(|v| v[i]).sum::<f64>() / bf;
            let ss = leave_out.iter().map(|v| (v[i] - m) * (v[i] - m)).sum::<f64>();
            sqrt((bf - 1.0) / bf * ss)
        })
        .collect();
    Ok((estimate, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn merge_order_is_irrelevant(xs in proptest::collection::vec(-1e6f64..1e6, 1..60), cut in 0usize..60) {
            let cut = cut.min(xs.len());
            let mut forward = ExactSum::ZERO;
            for &x in &xs { forward.add(x); }
            let mut a = ExactSum::ZERO;
            let mut b = ExactSum::ZERO;
            for &x in &xs[..cut] { a.add(x); }
            for &x in xs[cut..].iter().rev() { b.add(x); }
            prop_assert_eq!(a + b, forward);
            prop_assert_eq!(b + a, forward);
            let plain: f64 = xs.iter().sum();
            prop_assert!((forward.value() - plain).abs() <= 1e-9 * (1.0 + plain.abs()) + xs.len() as f64 * 1e-15);
        }
    }

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        // Per-batch (sum, count) pairs; the jackknife of a ratio mean reduces to
        // the usual sample standard error when batches hold one value each.
        #[derive(Clone)]
        struct Acc(ExactSum, u64);
        impl Merge for Acc {
            fn merge_from(&mut self, o: &Self) -> Result<()> {
                self.0 += o.0;
                self.1 += o.1;
                Ok(())
            }
        }
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let mut b = Batched::new(Acc(ExactSum::ZERO, 0), xs.len());
        for (j, &x) in xs.iter().enumerate() {
            b.add(j as u64, &Acc(ExactSum::from_f64(x), 1)).unwrap();
        }
        let (m, se) = jackknife(&b, |a| Ok(alloc::vec![a.0.value() / a.1 as f64])).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((m[0] - mean).abs() < 1e-12);
        assert!((se[0] - (var / n).sqrt()).abs() < 1e-12);
        let single = Batched::new(Acc(ExactSum::ZERO, 0), 1);
        assert!(jackknife(&single, |a| Ok(alloc::vec![a.1 as f64])).is_err());
    }
}
