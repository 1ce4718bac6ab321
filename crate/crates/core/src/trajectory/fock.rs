use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{ceil, sqrt};
use crate::model::SystemParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Operator stored by diagonals: entry `(n, n + offset)` of band `offset`
/// is `diag[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    bands: Vec<(isize, Vec<Complex64>)>,
}

impl SparseOp {
    pub fn zero(dim: usize) -> Self {
        SparseOp { dim, bands: Vec::new() }
    }

    fn band(dim: usize, offset: isize, f: impl Fn(usize) -> Complex64) -> Self {
        let diag = (0..dim)
            .map(|n| {
                let m = n as isize + offset;
                if m >= 0 && (m as usize) < dim {
                    f(n)
                } else {
                    ZERO
                }
            })
            .collect();
        SparseOp {
            dim,
            bands: alloc::vec![(offset, diag)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let offset = col as isize - row as isize;
        self.bands
            .iter()
            .filter(|(o, _)| *o == offset)
            .map(|(_, d)| d[row])
            .sum()
    }

    pub fn plus(&self, other: &SparseOp) -> SparseOp {
        let mut out = self.clone();
        for (o, d) in &other.bands {
            match out.bands.iter_mut().find(|(p, _)| p == o) {
                Some((_, e)) => e.iter_mut().zip(d).for_each(|(a, b)| *a += b),
                None => out.bands.push((*o, d.clone())),
            }
        }
        out
    }

    pub fn scaled(&self, s: Complex64) -> SparseOp {
        SparseOp {
            dim: self.dim,
            bands: self
                .bands
                .iter()
                .map(|(o, d)| (*o, d.iter().map(|x| x * s).collect()))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> SparseOp {
        let mut bands = Vec::with_capacity(self.bands.len());
        for (o, d) in &self.bands {
            let mut t = alloc::vec![ZERO; self.dim];
            for (n, x) in d.iter().enumerate() {
                let m = n as isize + o;
                if m >= 0 && (m as usize) < self.dim {
                    t[m as usize] = x.conj();
                }
            }
            bands.push((-o, t));
        }
        SparseOp { dim: self.dim, bands }
    }

    /// `out = self * psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = ZERO);
        for (o, d) in &self.bands {
            for (n, x) in d.iter().enumerate() {
                let m = n as isize + o;
                if m >= 0 && (m as usize) < self.dim {
                    out[n] += x * psi[m as usize];
                }
            }
        }
    }

    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mut tmp = alloc::vec![ZERO; self.dim];
        self.apply(psi, &mut tmp);
        psi.iter().zip(&tmp).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Generators of the conditioned DPO evolution in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub dim: usize,
    pub kappa: f64,
    pub lambda_pump: f64,
    /// `a`, with `sqrt(n)` on the superdiagonal.
    pub annihilate: SparseOp,
    /// `y = -i (a - a^dag)/2`.
    pub quadrature_y: SparseOp,
    /// `(kappa lambda/2)(a^dag^2 - a^2)`.
    pub pump_term: SparseOp,
    /// `kappa a^dag a`.
    pub damping_term: SparseOp,
    /// `sqrt(n)` for `n < dim`.
    pub(crate) sqrt_n: Vec<f64>,
    /// `sqrt((n + 1)(n + 2))` for `n < dim`.
    pub(crate) sqrt_pair: Vec<f64>,
}

pub fn build_operators(dim: usize, params: &SystemParams) -> Result<OperatorSet> {
    if dim < 2 {
        return Err(Error::invalid("dim", dim as f64, "Fock dimension >= 2"));
    }
    params.validate()?;
    let sqrt_n: Vec<f64> = (0..dim).map(|n| sqrt(n as f64)).collect();
    let sqrt_pair: Vec<f64> = (0..dim).map(|n| sqrt((n + 1) as f64 * (n + 2) as f64)).collect();
    let a = SparseOp::band(dim, 1, |n| Complex64::new(sqrt_n[n + 1], 0.0));
    let a_dag = a.adjoint();
    let i = Complex64::new(0.0, 1.0);
    let quadrature_y = a.plus(&a_dag.scaled(-Complex64::new(1.0, 0.0))).scaled(-i * 0.5);
    let a2 = SparseOp::band(dim, 2, |n| Complex64::new(sqrt_pair[n], 0.0));
    let pump_term = a2
        .adjoint()
        .plus(&a2.scaled(Complex64::new(-1.0, 0.0)))
        .scaled(Complex64::new(0.5 * params.kappa * params.lambda_pump, 0.0));
    let damping_term = SparseOp::band(dim, 0, |n| Complex64::new(params.kappa * n as f64, 0.0));
    Ok(OperatorSet {
        dim,
        kappa: params.kappa,
        lambda_pump: params.lambda_pump,
        annihilate: a,
        quadrature_y,
        pump_term,
        damping_term,
        sqrt_n,
        sqrt_pair,
    })
}

/// Normalized conditioned state of the DPO mode.
#[derive(Debug, Clone)]
pub struct ConditionedState {
    pub amps: Vec<Complex64>,
    pub(crate) scratch: Vec<Complex64>,
}

impl ConditionedState {
    pub fn vacuum(dim: usize) -> Self {
        let mut amps = alloc::vec![ZERO; dim];
        amps[0] = Complex64::new(1.0, 0.0);
        ConditionedState {
            scratch: amps.clone(),
            amps,
        }
    }

    /// Coherent state `|alpha>` truncated to `dim` levels and renormalized.
    pub fn coherent(dim: usize, alpha: Complex64) -> Self {
        let mut amps = Vec::with_capacity(dim);
        let mut c = Complex64::new(1.0, 0.0);
        for n in 0..dim {
            if n > 0 {
                c = c * alpha / sqrt(n as f64);
            }
            amps.push(c);
        }
        let mut s = ConditionedState {
            scratch: amps.clone(),
            amps,
        };
        s.normalize().expect("coherent amplitudes are nonzero");
        s
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / sqrt(n2);
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(n2)
    }

    /// `<a>`.
    pub fn mean_a(&self) -> Complex64 {
        let mut acc = ZERO;
        for n in 1..self.amps.len() {
            acc += self.amps[n - 1].conj() * self.amps[n] * sqrt(n as f64);
        }
        acc
    }

    /// `<a^dag a>`.
    pub fn photon_number(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum()
    }

    /// `<a^2>`.
    pub fn mean_a2(&self) -> Complex64 {
        let mut acc = ZERO;
        for n in 2..self.amps.len() {
            acc += self.amps[n - 2].conj() * self.amps[n] * sqrt((n * (n - 1)) as f64);
        }
        acc
    }

    /// `<y^2>` for `y = -i(a - a^dag)/2`: `(2 <a^dag a> + 1 - 2 Re<a^2>)/4`.
    pub fn y2(&self) -> f64 {
        (2.0 * self.photon_number() + 1.0 - 2.0 * self.mean_a2().re) / 4.0
    }

    /// `<x^2>` for `x = (a + a^dag)/2`.
    pub fn x2(&self) -> f64 {
        (2.0 * self.photon_number() + 1.0 + 2.0 * self.mean_a2().re) / 4.0
    }

    /// Population of the top `ceil(dim/10)` levels.
    pub fn truncation_leak(&self) -> f64 {
        let dim = self.amps.len();
        let k = (ceil(dim as f64 / 10.0) as usize).max(1);
        self.amps[dim - k..].iter().map(|a| a.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(dim: usize) -> OperatorSet {
        build_operators(dim, &SystemParams::baseline(0.0)).unwrap()
    }

    fn basis(dim: usize, n: usize) -> Vec<Complex64> {
        let mut v = alloc::vec![ZERO; dim];
        v[n] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn ladder_action() {
        let o = ops(8);
        let mut out = alloc::vec![ZERO; 8];
        o.annihilate.apply(&basis(8, 1), &mut out);
        assert_eq!(out, basis(8, 0));
        o.annihilate.apply(&basis(8, 5), &mut out);
        assert!((out[4].re - 5f64.sqrt()).abs() < 1e-15);
        assert!((o.annihilate.entry(2, 3).re - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vacuum_quadrature_variance() {
        let o = ops(8);
        let vac = basis(8, 0);
        let mut y = alloc::vec![ZERO; 8];
        o.quadrature_y.apply(&vac, &mut y);
        let y2: f64 = y.iter().map(|c| c.norm_sqr()).sum();
        assert!((y2 - 0.25).abs() < 1e-15);
        assert!((ConditionedState::vacuum(8).y2() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pump_term_creates_pairs() {
        let p = SystemParams::baseline(0.0);
        let o = build_operators(8, &p).unwrap();
        let mut out = alloc::vec![ZERO; 8];
        o.pump_term.apply(&basis(8, 0), &mut out);
        let scale = 0.5 * p.kappa * p.lambda_pump;
        assert!((out[2].re / scale - 2f64.sqrt()).abs() < 1e-15);
        assert!(out.iter().enumerate().all(|(n, c)| n == 2 || c.norm() == 0.0));
    }

    #[test]
    fn operator_symmetries() {
        let o = ops(10);
        for r in 0..10 {
            for c in 0..10 {
                let y = o.quadrature_y.entry(r, c);
                assert!((y - o.quadrature_y.entry(c, r).conj()).norm() < 1e-15);
                let pump = o.pump_term.entry(r, c);
                assert!((pump + o.pump_term.entry(c, r).conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn state_moments_match_operators() {
        let o = ops(12);
        let s = ConditionedState::coherent(12, Complex64::new(0.3, -0.4));
        let a = o.annihilate.expectation(&s.amps);
        assert!((a - s.mean_a()).norm() < 1e-12);
        let mut ya = alloc::vec![ZERO; 12];
        o.quadrature_y.apply(&s.amps, &mut ya);
        let y2: f64 = ya.iter().map(|c| c.norm_sqr()).sum();
        assert!((y2 - s.y2()).abs() < 1e-12);
        assert!((s.y2() - (0.16 + 0.25)).abs() < 1e-6);
        assert!((s.x2() - (0.09 + 0.25)).abs() < 1e-6);
    }

    #[test]
    fn y_expectation_of_superposition() {
        let mut s = ConditionedState::vacuum(4);
        s.amps[0] = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        s.amps[1] = Complex64::new(0.0, core::f64::consts::FRAC_1_SQRT_2);
        assert!((s.mean_a().im - 0.5).abs() < 1e-15);
    }

    #[test]
    fn leak_window() {
        let mut s = ConditionedState::vacuum(16);
        s.amps[14] = Complex64::new(1e-2, 0.0);
        assert!((s.truncation_leak() - 1e-4).abs() < 1e-18);
        assert!(build_operators(1, &SystemParams::baseline(0.0)).is_err());
    }
}
