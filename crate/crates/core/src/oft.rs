//! Operator Fourier transform `Â_f(ω) = Σ_ν A_ν f̂_σ(ω - ν)` and the overlap
//! coefficients `G(ν,ν') = ∫ γ(ω) f̂(ω-ν) f̂(ω-ν') dω`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bohr::{BohrDecomposition, BohrSpectrum};
use crate::error::{Error, Result};
use crate::operator::{c, matrix_function, CMatrix, EigenSystem};
use crate::weights::filter::GaussianFilter;
use crate::weights::kernels::Kernels;

/// `Â_f(ω)` for one jump operator.
#[derive(Debug, Clone)]
pub struct OftEvaluation {
    pub omega: f64,
    pub sigma: f64,
    pub matrix: CMatrix,
}

impl OftEvaluation {
    /// Distance to a fresh evaluation of the defining Bohr sum.
    pub fn recompute_defect(&self, d: &BohrDecomposition) -> Result<f64> {
        let again = oft_eval(d, self.omega, self.sigma)?;
        Ok((&again.matrix - &self.matrix).norm())
    }
}

pub fn oft_eval(d: &BohrDecomposition, omega: f64, sigma: f64) -> Result<OftEvaluation> {
    let filter = GaussianFilter::new(sigma)?;
    let n = d.source.nrows();
    let mut matrix = CMatrix::zeros(n, n);
    for comp in &d.components {
        matrix += &comp.matrix * c(filter.hat(omega - comp.nu));
    }
    Ok(OftEvaluation {
        omega,
        sigma,
        matrix,
    })
}

/// `(2π)^{-1/2} ∫ e^{iPt} A e^{-iPt} e^{-iωt} f_σ(t) dt` by the trapezoid rule
/// on `|t| ≤ 12/σ`, with `e^{iPt}` built from the spectral decomposition of `P`.
pub fn oft_time_domain(
    e: &EigenSystem,
    a: &CMatrix,
    omega: f64,
    sigma: f64,
    nodes: usize,
) -> Result<CMatrix> {
    if nodes < 2 {
        return Err(Error::InvalidArgument("need at least two nodes".into()));
    }
    let filter = GaussianFilter::new(sigma)?;
    let t_max = 12.0 / sigma;
    let h = 2.0 * t_max / (nodes - 1) as f64;
    let n = a.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..nodes {
        let t = -t_max + k as f64 * h;
        let w = if k == 0 || k == nodes - 1 { 0.5 * h } else { h };
        let fwd = matrix_function(e, |x| Complex64::from_polar(1.0, x * t))?;
        let heis = &fwd * a * fwd.adjoint();
        acc += heis * (Complex64::from_polar(1.0, -omega * t) * (w * filter.eval(t)));
    }
    Ok(acc / c((2.0 * PI).sqrt()))
}

/// `G(ν,ν')` over all pairs of a Bohr spectrum, stored as logarithms.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    pub sigma: f64,
    pub weight_label: String,
    pub frequencies: Vec<f64>,
    ln_entries: Vec<f64>,
    /// Largest `|ln G_closed - ln G_direct|` seen during verification.
    pub max_ln_defect: f64,
}

/// Agreement required between the closed form and direct quadrature.
pub const OVERLAP_TOL: f64 = 1e-8;

impl OverlapTable {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn ln_get(&self, a: usize, b: usize) -> f64 {
        self.ln_entries[a * self.frequencies.len() + b]
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.ln_get(a, b).exp()
    }
}

/// Builds the table from the product-rule closed form and checks every
/// representable entry against direct quadrature of the definition.
pub fn overlap_table(s: &BohrSpectrum, k: &Kernels) -> Result<OverlapTable> {
    build_table(s, k, true)
}

/// Closed form only.
pub fn overlap_table_unchecked(s: &BohrSpectrum, k: &Kernels) -> Result<OverlapTable> {
    build_table(s, k, false)
}

fn build_table(s: &BohrSpectrum, k: &Kernels, verify: bool) -> Result<OverlapTable> {
    let n = s.len();
    let f = &s.frequencies;
    let mut ln_entries = vec![f64::NEG_INFINITY; n * n];
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in a..n {
            let v = k.ln_overlap(f[a], f[b])?;
            if verify && v > -700.0 {
                let direct = k.ln_overlap_direct(f[a], f[b])?;
                let defect = (v - direct).abs();
                worst = worst.max(defect);
                if !(defect <= OVERLAP_TOL) {
                    return Err(Error::CheckFailed {
                        what: format!("overlap G({}, {}) closed form vs quadrature", f[a], f[b]),
                        deviation: defect,
                        tolerance: OVERLAP_TOL,
                    });
                }
            }
            ln_entries[a * n + b] = v;
            ln_entries[b * n + a] = v;
        }
    }
    Ok(OverlapTable {
        sigma: k.sigma(),
        weight_label: k.weight().label().to_string(),
        frequencies: f.clone(),
        ln_entries,
        max_ln_defect: worst,
    })
}
