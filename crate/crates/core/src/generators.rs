//! Davies and localised Davies generators as dense superoperators.
//!
//! All assembly happens in the eigenbasis of `P`, where a Bohr component
//! `A_ν` is simply the set of entries `(i, j)` of `U†AU` whose frequency
//! `E_i - E_j` falls in the cluster of `ν`. For a real symmetric frequency
//! weight `W(ν, ν')` the dissipator
//!
//! ```text
//! 𝓓(T) = Σ_A Σ_{ν,ν'} W(ν,ν') (A_ν T A_{ν'}† - ½{A_{ν'}† A_ν, T})
//! ```
//!
//! has eigenbasis matrix elements `Ã_ij conj(Ã_kl) W(c_ij, c_kl)`, which is
//! what [`assemble`] computes before rotating back with `conj(U) ⊗ U`.
//! `W = γ(ν) δ` gives the Davies generator and `W = G_σ` the localised one.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bohr::{bohr_spectrum, decompose, default_cluster_tol, BohrDecomposition, BohrSpectrum};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::operator::{
    c, ensure_square, hermitian_defect, hermitian_part, max_abs, schatten_norm, unvec, vec_of,
    CMatrix, EigenSystem, I,
};
use crate::weights::filter::GaussianFilter;
use crate::weights::gamma::{kms_from_phi, Phi, WeightSpec};
use crate::weights::kernels::{b1_time, Kernels};
use crate::weights::quadrature::{gauss_legendre, panel_breaks, peak_window};

/// Family of jump operators with its adjoint-closure certificate.
#[derive(Debug, Clone)]
pub struct JumpFamily {
    operators: Vec<CMatrix>,
    /// `partner[k]` is the index of a member equal to `operators[k]†`, if any.
    partner: Vec<Option<usize>>,
    closure_deviation: Vec<f64>,
}

/// Relative tolerance for matching an operator with the adjoint of another.
pub const ADJOINT_TOL: f64 = 1e-12;

impl JumpFamily {
    pub fn new(operators: Vec<CMatrix>) -> Result<JumpFamily> {
        if operators.is_empty() {
            return Err(Error::InvalidArgument("empty jump family".into()));
        }
        let d = ensure_square(&operators[0])?;
        for a in &operators {
            let e = ensure_square(a)?;
            if e != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: e,
                });
            }
            crate::operator::ensure_finite(a)?;
        }
        let scale = operators.iter().map(max_abs).fold(1.0_f64, f64::max);
        let mut partner = Vec::with_capacity(operators.len());
        let mut closure_deviation = Vec::with_capacity(operators.len());
        for a in &operators {
            let adj = a.adjoint();
            let (best, dev) = operators
                .iter()
                .enumerate()
                .map(|(k, b)| (k, max_abs(&(b - &adj))))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("family is not empty");
            partner.push((dev <= ADJOINT_TOL * scale).then_some(best));
            closure_deviation.push(dev);
        }
        Ok(JumpFamily {
            operators,
            partner,
            closure_deviation,
        })
    }

    /// Adds `A†` for every member without a partner.
    pub fn closed(operators: Vec<CMatrix>) -> Result<JumpFamily> {
        let family = JumpFamily::new(operators)?;
        let mut ops = family.operators.clone();
        for (k, p) in family.partner.iter().enumerate() {
            if p.is_none() {
                ops.push(family.operators[k].adjoint());
            }
        }
        JumpFamily::new(ops)
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn closed_under_adjoint(&self) -> bool {
        self.partner.iter().all(Option::is_some)
    }

    pub fn partner(&self, k: usize) -> Option<usize> {
        self.partner[k]
    }

    pub fn require_closed(&self) -> Result<()> {
        match self.partner.iter().position(Option::is_none) {
            None => Ok(()),
            Some(index) => Err(Error::NotAdjointClosed {
                index,
                deviation: self.closure_deviation[index],
            }),
        }
    }

    /// `Σ_A ‖A‖²` (operator norm).
    pub fn norm_sum(&self) -> f64 {
        self.operators
            .iter()
            .map(|a| schatten_norm(a, f64::INFINITY).unwrap_or(f64::NAN).powi(2))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Davies,
    Localised,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyPath {
    BohrSum,
    OmegaQuadrature,
}

/// Deliberate corruption used to check that self-tests can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negates every overlap coefficient in the Bohr-sum path.
    FlipOverlapSign,
}

#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    pub path: AssemblyPath,
    /// Reject weights that are not balanced (localised) or not KMS (Davies).
    pub require_balance: bool,
    /// Check each overlap coefficient against direct quadrature.
    pub verify_overlaps: bool,
    pub cluster_tol: Option<f64>,
    pub fault: Option<Fault>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            path: AssemblyPath::BohrSum,
            require_balance: true,
            verify_overlaps: true,
            cluster_tol: None,
            fault: None,
        }
    }
}

impl AssemblyOptions {
    pub fn with_path(path: AssemblyPath) -> AssemblyOptions {
        AssemblyOptions {
            path,
            ..AssemblyOptions::default()
        }
    }

    pub fn unchecked_balance() -> AssemblyOptions {
        AssemblyOptions {
            require_balance: false,
            ..AssemblyOptions::default()
        }
    }
}

/// Assembled Lindbladian with its ingredients.
#[derive(Debug, Clone)]
pub struct GeneratorBundle {
    pub kind: GeneratorKind,
    pub dim: usize,
    /// Full generator `T ↦ -i[P + B, T] + 𝓓(T)` acting on column-stacked vectors.
    pub superoperator: CMatrix,
    /// Dissipative part `𝓓` alone.
    pub dissipator: CMatrix,
    pub coherent_b: CMatrix,
    /// `Σ_A ∫ γ Â†Â dω`, the operator inside the anticommutator.
    pub k_matrix: CMatrix,
    pub hamiltonian: CMatrix,
    pub sigma: Option<f64>,
    pub weight: WeightSpec,
    pub model_id: String,
    pub path: AssemblyPath,
    pub eigen: EigenSystem,
    /// `‖vec(I)† S‖ / ‖S‖_F`.
    pub trace_defect: f64,
}

/// Tolerance on the trace functional `vec(I)† S`, relative to `‖S‖_F`.
pub const TRACE_TOL: f64 = 1e-10;

impl GeneratorBundle {
    pub fn apply(&self, t: &CMatrix) -> CMatrix {
        unvec(&(&self.superoperator * vec_of(t)), self.dim)
    }

    pub fn apply_dissipator(&self, t: &CMatrix) -> CMatrix {
        unvec(&(&self.dissipator * vec_of(t)), self.dim)
    }

    /// `Y = i(P + B) - ½ K`.
    pub fn effective_generator(&self) -> CMatrix {
        &self.hamiltonian * I - &self.k_matrix * c(0.5)
    }

    pub fn stationarity(&self) -> StationarityReport {
        let rho = gibbs_unnormalised(&self.eigen);
        stationarity_report(self, &rho)
    }
}

fn gibbs_unnormalised(e: &EigenSystem) -> CMatrix {
    let lo = e.eigenvalues[0];
    crate::operator::matrix_function_real(e, |x| (-(x - lo)).exp())
        .expect("exponential of a shifted spectrum is finite")
}

fn trace_functional_defect(s: &CMatrix, d: usize) -> f64 {
    let mut worst = 0.0_f64;
    for col in 0..s.ncols() {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            acc += s[(i + i * d, col)];
        }
        worst = worst.max(acc.norm());
    }
    worst / s.norm().max(f64::MIN_POSITIVE)
}

/// Stationarity diagnostics for `e^{-P}`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StationarityReport {
    /// `‖𝓛(e^{-P})‖_F / ‖e^{-P}‖_F`.
    pub residual_fro: f64,
    /// `‖𝓛(e^{-P})‖_1 / ‖e^{-P}‖_1`.
    pub residual_trace_norm: f64,
    /// `‖𝓓(e^{-P})‖_F / ‖e^{-P}‖_F`.
    pub dissipator_only: f64,
    /// `‖-i[P + B, e^{-P}]‖_F / ‖e^{-P}‖_F`.
    pub commutator_only: f64,
    /// `‖𝓓(e^{-P}) - i[B, e^{-P}]‖_F / ‖e^{-P}‖_F`.
    pub coherent_balance: f64,
    /// Defect of `𝓛 = 𝓓 - i[P + B, ·]` on `e^{-P}`, relative to the parts.
    pub recombination_defect: f64,
}

fn stationarity_report(b: &GeneratorBundle, rho: &CMatrix) -> StationarityReport {
    let norm = rho.norm();
    let total = b.apply(rho);
    let diss = b.apply_dissipator(rho);
    let comm = (&b.hamiltonian * rho - rho * &b.hamiltonian) * (-I);
    let b_comm = (&b.coherent_b * rho - rho * &b.coherent_b) * I;
    let parts = diss.norm() + comm.norm();
    let tn = schatten_norm(rho, 1.0).unwrap_or(f64::NAN);
    StationarityReport {
        residual_fro: total.norm() / norm,
        residual_trace_norm: schatten_norm(&total, 1.0).unwrap_or(f64::NAN) / tn,
        dissipator_only: diss.norm() / norm,
        commutator_only: comm.norm() / norm,
        coherent_balance: (&diss - b_comm).norm() / norm,
        recombination_defect: (&total - &diss - &comm).norm() / parts.max(f64::MIN_POSITIVE),
    }
}

struct Prepared {
    spectrum: BohrSpectrum,
    decomps: Vec<BohrDecomposition>,
}

fn prepare(model: &Model, opts: &AssemblyOptions) -> Result<Prepared> {
    let e = &model.eigen;
    let tol = opts.cluster_tol.unwrap_or_else(|| default_cluster_tol(e));
    let spectrum = bohr_spectrum(e, tol)?;
    let decomps = model
        .jumps
        .operators()
        .iter()
        .map(|a| decompose(a, e, &spectrum))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { spectrum, decomps })
}

/// Frequency indices carried by at least one nonzero eigenbasis entry.
fn active_indices(p: &Prepared) -> Vec<bool> {
    let mut active = vec![false; p.spectrum.len()];
    for dec in &p.decomps {
        for c in &dec.components {
            active[c.index] = true;
        }
    }
    active
}

/// Lazily filled symmetric table over frequency-index pairs.
struct PairTable<T: Copy> {
    n: usize,
    values: Vec<Option<T>>,
}

impl<T: Copy> PairTable<T> {
    fn new(n: usize) -> Self {
        PairTable {
            n,
            values: vec![None; n * n],
        }
    }

    fn get_or<F: FnMut(usize, usize) -> Result<T>>(
        &mut self,
        a: usize,
        b: usize,
        mut f: F,
    ) -> Result<T> {
        let k = a * self.n + b;
        if let Some(v) = self.values[k] {
            return Ok(v);
        }
        let v = f(a, b)?;
        self.values[k] = Some(v);
        Ok(v)
    }
}

/// Eigenbasis dissipator `S̃_D` and anticommutator operator `K̃` for a
/// symmetric frequency weight.
fn dissipator_eigen<W>(p: &Prepared, d: usize, mut w: W) -> Result<(CMatrix, CMatrix)>
where
    W: FnMut(usize, usize) -> Result<f64>,
{
    let d2 = d * d;
    let mut s = CMatrix::zeros(d2, d2);
    let mut k = CMatrix::zeros(d, d);
    let sp = &p.spectrum;
    for dec in &p.decomps {
        let m = &dec.eigenbasis;
        let nz: Vec<(usize, usize, Complex64, usize)> = (0..d)
            .flat_map(|j| (0..d).map(move |i| (i, j)))
            .filter_map(|(i, j)| {
                let z = m[(i, j)];
                (z.re != 0.0 || z.im != 0.0).then(|| (i, j, z, sp.index(i, j)))
            })
            .collect();
        for &(i, j, z, a) in &nz {
            for &(kk, l, y, b) in &nz {
                let wv = w(a, b)?;
                if wv == 0.0 {
                    continue;
                }
                s[(i + kk * d, j + l * d)] += z * y.conj() * wv;
            }
        }
        for l in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    let x = m[(i, j)];
                    let y = m[(i, l)];
                    if (x.re == 0.0 && x.im == 0.0) || (y.re == 0.0 && y.im == 0.0) {
                        continue;
                    }
                    acc += x.conj() * y * w(sp.index(i, j), sp.index(i, l))?;
                }
                k[(j, l)] += acc;
            }
        }
    }
    Ok((s, hermitian_part(&k)))
}

/// `B̃_jl = Σ_A Σ_i conj(Ã_ij) Ã_il b(c_ij, c_il)` in the eigenbasis.
fn coherent_eigen(p: &Prepared, d: usize, kernels: &Kernels) -> Result<CMatrix> {
    let sp = &p.spectrum;
    let f = &sp.frequencies;
    let mut table: PairTable<Complex64> = PairTable::new(sp.len());
    let mut b = CMatrix::zeros(d, d);
    for dec in &p.decomps {
        let m = &dec.eigenbasis;
        for l in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    let x = m[(i, j)];
                    let y = m[(i, l)];
                    if (x.re == 0.0 && x.im == 0.0) || (y.re == 0.0 && y.im == 0.0) {
                        continue;
                    }
                    let (ia, ib) = (sp.index(i, j), sp.index(i, l));
                    let kv = table.get_or(ia, ib, |u, v| kernels.b(f[u], f[v]))?;
                    acc += x.conj() * y * kv;
                }
                b[(j, l)] += acc;
            }
        }
    }
    let scale = max_abs(&b).max(f64::MIN_POSITIVE);
    let defect = hermitian_defect(&b);
    if defect > 1e-12 * scale.max(1.0) {
        return Err(Error::NonHermitian {
            max_asymmetry: defect,
            tolerance: 1e-12 * scale.max(1.0),
        });
    }
    Ok(hermitian_part(&b))
}

/// Completes an eigenbasis dissipator with `-½{K,·}` and `-i[H,·]` and
/// rotates everything back to the original basis.
fn finish(
    model: &Model,
    s_diss: CMatrix,
    k_eig: CMatrix,
    b_eig: CMatrix,
    kind: GeneratorKind,
    sigma: Option<f64>,
    weight: &WeightSpec,
    path: AssemblyPath,
) -> Result<GeneratorBundle> {
    let e = &model.eigen;
    let d = e.dim();
    let d2 = d * d;
    let mut h_eig = b_eig.clone();
    for (j, &ev) in e.eigenvalues.iter().enumerate() {
        h_eig[(j, j)] += c(ev);
    }
    let mut diss = s_diss;
    // -½ (I ⊗ K + Kᵀ ⊗ I), and -i (I ⊗ H - Hᵀ ⊗ I) for the full generator.
    let mut ham = CMatrix::zeros(d2, d2);
    for l in 0..d {
        for k in 0..d {
            for i in 0..d {
                // I ⊗ X: row i + l d, col k + l d carries X_ik.
                diss[(i + l * d, k + l * d)] -= k_eig[(i, k)] * 0.5;
                ham[(i + l * d, k + l * d)] += h_eig[(i, k)];
                // Xᵀ ⊗ I: row l + i d, col l + k d carries X_ki.
                diss[(l + i * d, l + k * d)] -= k_eig[(k, i)] * 0.5;
                ham[(l + i * d, l + k * d)] -= h_eig[(k, i)];
            }
        }
    }
    let full_eig = &diss - ham * I;
    let u = &e.vectors;
    let w = u.conjugate().kronecker(u);
    let wa = w.adjoint();
    let superoperator = &w * full_eig * &wa;
    let dissipator = &w * diss * &wa;
    let trace_defect = trace_functional_defect(&superoperator, d);
    if !(trace_defect <= TRACE_TOL) {
        return Err(Error::CheckFailed {
            what: "trace annihilation".into(),
            deviation: trace_defect,
            tolerance: TRACE_TOL,
        });
    }
    let coherent_b = hermitian_part(&e.from_eigenbasis(&b_eig));
    let k_matrix = hermitian_part(&e.from_eigenbasis(&k_eig));
    let hamiltonian = &model.p + &coherent_b;
    Ok(GeneratorBundle {
        kind,
        dim: d,
        superoperator,
        dissipator,
        coherent_b,
        k_matrix,
        hamiltonian,
        sigma,
        weight: weight.clone(),
        model_id: model.id.clone(),
        path,
        eigen: e.clone(),
        trace_defect,
    })
}

/// Davies generator `-i[P,·] + Σ_A Σ_ν γ(ν)(A_ν · A_ν† - ½{A_ν†A_ν, ·})`.
pub fn davies_dissipator(
    model: &Model,
    gamma: &WeightSpec,
    opts: &AssemblyOptions,
) -> Result<GeneratorBundle> {
    davies_scaled(model, gamma, 1.0, opts)
}

/// Davies generator with every rate multiplied by `scale`.
pub fn davies_scaled(
    model: &Model,
    gamma: &WeightSpec,
    scale: f64,
    opts: &AssemblyOptions,
) -> Result<GeneratorBundle> {
    model.jumps.require_closed()?;
    let p = prepare(model, opts)?;
    if opts.require_balance {
        let grid: Vec<f64> = p.spectrum.frequencies.clone();
        let defect = gamma.kms_defect(&grid);
        if !gamma.is_kms() || !(defect <= 1e-12) {
            return Err(Error::NotBalanced(format!(
                "weight {} violates the KMS condition on the Bohr spectrum (defect {defect:.3e})",
                gamma.label()
            )));
        }
    }
    let f = p.spectrum.frequencies.clone();
    let rates: Vec<f64> = f.iter().map(|&nu| scale * gamma.eval(nu)).collect();
    if let Some(k) = rates.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFiniteFunction { eigenvalue: f[k] });
    }
    let d = model.dim();
    let (s, k) = dissipator_eigen(&p, d, |a, b| Ok(if a == b { rates[a] } else { 0.0 }))?;
    finish(
        model,
        s,
        k,
        CMatrix::zeros(d, d),
        GeneratorKind::Davies,
        None,
        gamma,
        AssemblyPath::BohrSum,
    )
}

fn check_localised_weight(gamma: &WeightSpec, sigma: f64, opts: &AssemblyOptions) -> Result<()> {
    GaussianFilter::new(sigma)?;
    if let Some(ws) = gamma.sigma() {
        if ws != sigma {
            return Err(Error::SigmaMismatch {
                weight: ws,
                filter: sigma,
            });
        }
    }
    if opts.require_balance && !gamma.is_balanced_for(sigma) {
        return Err(Error::NotBalanced(format!(
            "weight {} is not balanced for sigma = {sigma}",
            gamma.label()
        )));
    }
    Ok(())
}

/// Localised dissipator in eigenbasis form along the requested path.
fn localised_parts(
    model: &Model,
    p: &Prepared,
    kernels: &Kernels,
    opts: &AssemblyOptions,
) -> Result<(CMatrix, CMatrix)> {
    let d = model.dim();
    match opts.path {
        AssemblyPath::BohrSum => {
            let f = p.spectrum.frequencies.clone();
            let sign = match opts.fault {
                Some(Fault::FlipOverlapSign) => -1.0,
                None => 1.0,
            };
            let mut table: PairTable<f64> = PairTable::new(f.len());
            let verify = opts.verify_overlaps;
            dissipator_eigen(p, d, |a, b| {
                let (a, b) = (a.min(b), a.max(b));
                table.get_or(a, b, |u, v| {
                    let ln = kernels.ln_overlap(f[u], f[v])?;
                    if verify && ln > -700.0 {
                        let direct = kernels.ln_overlap_direct(f[u], f[v])?;
                        if !((ln - direct).abs() <= crate::oft::OVERLAP_TOL) {
                            return Err(Error::CheckFailed {
                                what: format!("overlap G({}, {})", f[u], f[v]),
                                deviation: (ln - direct).abs(),
                                tolerance: crate::oft::OVERLAP_TOL,
                            });
                        }
                    }
                    Ok(sign * ln.exp())
                })
            })
        }
        AssemblyPath::OmegaQuadrature => omega_quadrature_parts(p, d, kernels),
    }
}

/// Frequency nodes and weights for the ω-integral: Gauss–Legendre panels over
/// the union of windows where `γ(ω) f̂(ω-ν)²` matters.
pub fn omega_nodes(
    spectrum: &BohrSpectrum,
    active: &[bool],
    kernels: &Kernels,
    panel_width: f64,
) -> Vec<(f64, f64)> {
    let g = kernels.weight();
    let f = kernels.filter();
    let s = kernels.sigma();
    let mut windows = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (k, &nu) in spectrum.frequencies.iter().enumerate() {
        if !active[k] {
            continue;
        }
        let h = |w: f64| g.ln_eval(w) + 2.0 * f.ln_hat(w - nu);
        if let Some(win) = peak_window(&h, nu, s) {
            best = best.max(win.max);
            windows.push(win);
        }
    }
    let intervals: Vec<(f64, f64)> = windows
        .iter()
        .filter(|w| w.max >= best - 80.0)
        .map(|w| (w.lo, w.hi))
        .collect();
    let (x, wts) = gauss_legendre(16);
    let mut nodes = Vec::new();
    for cuts in panel_breaks(&intervals, panel_width, &g.breakpoints()) {
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&wts) {
                nodes.push((mid + half * xi, half * wi));
            }
        }
    }
    nodes
}

fn omega_k_matrix(p: &Prepared, d: usize, kernels: &Kernels, nodes: &[(f64, f64)]) -> CMatrix {
    let g = kernels.weight();
    let f = kernels.filter();
    let freqs = &p.spectrum.frequencies;
    let mut k = CMatrix::zeros(d, d);
    for &(w, wt) in nodes {
        let scale = (wt * g.eval(w)).sqrt();
        if scale == 0.0 {
            continue;
        }
        let hat: Vec<f64> = freqs.iter().map(|&nu| f.hat(w - nu)).collect();
        for dec in &p.decomps {
            let l = CMatrix::from_fn(d, d, |i, j| {
                dec.eigenbasis[(i, j)] * (scale * hat[p.spectrum.index(i, j)])
            });
            k += l.adjoint() * &l;
        }
    }
    k
}

fn omega_quadrature_parts(p: &Prepared, d: usize, kernels: &Kernels) -> Result<(CMatrix, CMatrix)> {
    let active = active_indices(p);
    let g = kernels.weight();
    let f = kernels.filter();
    let s = kernels.sigma();
    // Halve the panel width until the anticommutator operator settles.
    let mut width = 0.5 * s;
    let mut nodes = omega_nodes(&p.spectrum, &active, kernels, width);
    let mut k = omega_k_matrix(p, d, kernels, &nodes);
    let mut settled = false;
    for _ in 0..4 {
        width *= 0.5;
        let finer = omega_nodes(&p.spectrum, &active, kernels, width);
        let k2 = omega_k_matrix(p, d, kernels, &finer);
        let change = (&k2 - &k).norm() / k2.norm().max(f64::MIN_POSITIVE);
        nodes = finer;
        k = k2;
        if change <= 1e-12 {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::Quadrature {
            what: "omega-quadrature node refinement".into(),
            estimate: f64::NAN,
        });
    }
    let d2 = d * d;
    let mut sm = CMatrix::zeros(d2, d2);
    let freqs = &p.spectrum.frequencies;
    for &(w, wt) in &nodes {
        let scale = (wt * g.eval(w)).sqrt();
        if scale == 0.0 {
            continue;
        }
        let hat: Vec<f64> = freqs.iter().map(|&nu| f.hat(w - nu)).collect();
        for dec in &p.decomps {
            let l = CMatrix::from_fn(d, d, |i, j| {
                dec.eigenbasis[(i, j)] * (scale * hat[p.spectrum.index(i, j)])
            });
            for lcol in 0..d {
                for kk in 0..d {
                    let y = l[(kk, lcol)].conj();
                    if y.re == 0.0 && y.im == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        let col = j + lcol * d;
                        for i in 0..d {
                            sm[(i + kk * d, col)] += l[(i, j)] * y;
                        }
                    }
                }
            }
        }
    }
    Ok((sm, hermitian_part(&k)))
}

/// Localised dissipator alone (no coherent term, no `-i[P,·]`).
pub fn localised_dissipator(
    model: &Model,
    gamma: &WeightSpec,
    sigma: f64,
    opts: &AssemblyOptions,
) -> Result<GeneratorBundle> {
    model.jumps.require_closed()?;
    check_localised_weight(gamma, sigma, opts)?;
    let p = prepare(model, opts)?;
    let kernels = Kernels::new(gamma.clone(), sigma)?;
    let (s, k) = localised_parts(model, &p, &kernels, opts)?;
    let d = model.dim();
    let mut bundle = finish(
        model,
        s,
        k,
        CMatrix::zeros(d, d),
        GeneratorKind::Localised,
        Some(sigma),
        gamma,
        opts.path,
    )?;
    bundle.superoperator = bundle.dissipator.clone();
    bundle.hamiltonian = CMatrix::zeros(d, d);
    Ok(bundle)
}

/// Coherent correction `B = Σ_A Σ_{ν,ν'} b(ν,ν') A_ν† A_ν'`.
pub fn coherent_term(
    model: &Model,
    gamma: &WeightSpec,
    sigma: f64,
    opts: &AssemblyOptions,
) -> Result<CMatrix> {
    model.jumps.require_closed()?;
    check_localised_weight(gamma, sigma, opts)?;
    let p = prepare(model, opts)?;
    let kernels = Kernels::new(gamma.clone(), sigma)?;
    let b = coherent_eigen(&p, model.dim(), &kernels)?;
    Ok(hermitian_part(&model.eigen.from_eigenbasis(&b)))
}

/// Full localised generator `-i[P + B, ·] + 𝓓_f`.
pub fn assemble_localised(
    model: &Model,
    gamma: &WeightSpec,
    sigma: f64,
    opts: &AssemblyOptions,
) -> Result<GeneratorBundle> {
    model.jumps.require_closed()?;
    check_localised_weight(gamma, sigma, opts)?;
    let p = prepare(model, opts)?;
    let kernels = Kernels::new(gamma.clone(), sigma)?;
    let (s, k) = localised_parts(model, &p, &kernels, opts)?;
    let b = coherent_eigen(&p, model.dim(), &kernels)?;
    finish(
        model,
        s,
        k,
        b,
        GeneratorKind::Localised,
        Some(sigma),
        gamma,
        opts.path,
    )
}

/// What to assemble.
#[derive(Debug, Clone)]
pub enum GeneratorSpec {
    Davies { gamma: WeightSpec },
    Localised { gamma: WeightSpec, sigma: f64 },
}

/// Full generator together with its stationarity report.
pub fn assemble_lindbladian(
    model: &Model,
    spec: &GeneratorSpec,
    opts: &AssemblyOptions,
) -> Result<(GeneratorBundle, StationarityReport)> {
    let bundle = match spec {
        GeneratorSpec::Davies { gamma } => davies_dissipator(model, gamma, opts)?,
        GeneratorSpec::Localised { gamma, sigma } => {
            assemble_localised(model, gamma, *sigma, opts)?
        }
    };
    let report = bundle.stationarity();
    Ok((bundle, report))
}

/// Dissipativity diagnostics for `Y`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DissipativityReport {
    /// Largest eigenvalue of `(Y + Y†)/2`.
    pub numerical_abscissa: f64,
    /// Largest real part of an eigenvalue of `Y`.
    pub spectral_abscissa: f64,
    /// Largest `Re⟨Yu, u⟩` over the sampled unit vectors.
    pub sampled_max: f64,
}

/// `Y = i(P + B) - ½ Σ_A ∫ γ Â†Â dω`, rejected unless dissipative.
pub fn effective_generator_y(bundle: &GeneratorBundle) -> Result<(CMatrix, DissipativityReport)> {
    let y = bundle.effective_generator();
    let report = dissipativity(&y, &[]);
    let scale = max_abs(&y).max(1.0);
    if report.numerical_abscissa > 1e-12 * scale || report.spectral_abscissa > 1e-10 * scale {
        return Err(Error::CheckFailed {
            what: "dissipativity of Y".into(),
            deviation: report.numerical_abscissa.max(report.spectral_abscissa),
            tolerance: 1e-12 * scale,
        });
    }
    Ok((y, report))
}

/// Numerical and spectral abscissae of `y`, plus `max Re⟨Yu,u⟩` over `samples`.
pub fn dissipativity(y: &CMatrix, samples: &[DVector<Complex64>]) -> DissipativityReport {
    let herm = hermitian_part(y);
    let numerical_abscissa = crate::operator::eig_hermitian(&herm)
        .map(|e| *e.eigenvalues.last().expect("nonempty"))
        .unwrap_or(f64::NAN);
    let (_, t) = nalgebra::Schur::new(y.clone()).unpack();
    let spectral_abscissa = (0..t.nrows())
        .map(|k| t[(k, k)].re)
        .fold(f64::NEG_INFINITY, f64::max);
    let sampled_max = samples
        .iter()
        .map(|u| {
            let yu = y * u;
            yu.dotc(u).re / u.norm_squared()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    DissipativityReport {
        numerical_abscissa,
        spectral_abscissa,
        sampled_max,
    }
}

/// `‖𝓛_σ(T) - 𝓛_0(T)‖_p`, where `𝓛_σ` is the full localised generator for
/// the balanced weight built from `phi` and `𝓛_0 = -i[P,·] + π 𝓓` is the
/// Davies generator of `γ₀(ω) = e^{-ω/2} φ(ω)`. The factor `π` is the
/// squared `L²` norm of the filter, which `G_σ(ν,ν)/γ(ν)` tends to.
pub fn davies_limit_distance(
    model: &Model,
    phi: &Phi,
    sigma: f64,
    t: &CMatrix,
    p: f64,
) -> Result<f64> {
    let localised = assemble_localised(
        model,
        &crate::weights::gamma::balanced_gamma(phi.clone(), sigma)?,
        sigma,
        &AssemblyOptions::default(),
    )?;
    let reference = davies_limit_reference(model, phi)?;
    davies_distance(&localised, &reference, t, p)
}

/// `-i[P,·] + π 𝓓_{γ₀}`: the `σ → 0` limit of the localised generators.
pub fn davies_limit_reference(model: &Model, phi: &Phi) -> Result<GeneratorBundle> {
    let g0 = kms_from_phi(phi.clone())?;
    davies_scaled(model, &g0, PI, &AssemblyOptions::default())
}

/// `‖𝓛(T) - 𝓛'(T)‖_p` for two assembled generators.
pub fn davies_distance(
    a: &GeneratorBundle,
    b: &GeneratorBundle,
    t: &CMatrix,
    p: f64,
) -> Result<f64> {
    schatten_norm(&(a.apply(t) - b.apply(t)), p)
}

/// Comparison of `B` from the Bohr sum with a time-domain evaluation.
#[derive(Debug, Clone)]
pub struct CoherentCalibration {
    pub b_bohr: CMatrix,
    pub b_time: CMatrix,
    /// Least-squares `κ` in `B_time ≈ κ B_bohr`.
    pub factor: Complex64,
    /// `‖B_time - κ B_bohr‖_F / ‖B_time‖_F`.
    pub residual: f64,
}

/// `κ = π√2/8`: the constant relating the time-domain `b₁(t)` written as a
/// double integral to the inverse Fourier transform of `b̂₁`.
pub fn expected_time_domain_factor() -> f64 {
    PI * 2f64.sqrt() / 8.0
}

/// Evaluates `B = Σ_A ∫ b₁(t) e^{-iPt} (∫ e^{iPs} A† e^{-2iPs} A e^{iPs} b₂(s) ds) e^{iPt} dt`
/// with `b₁` from its double-integral form and
/// `b₂(s) = 2√π σ e^{-σ²(2s+i)²/4} γ̂(2s+i)`, `γ̂` being the unitary Fourier
/// transform of `γ` continued to `2s + i`. In the eigenbasis of `P` both time
/// integrals reduce to scalar transforms at the frequencies
/// `ν' - ν` and `ν + ν'` of each entry pair.
pub fn coherent_term_time_domain(
    model: &Model,
    gamma: &WeightSpec,
    sigma: f64,
) -> Result<CoherentCalibration> {
    let opts = AssemblyOptions::default();
    let b_bohr = coherent_term(model, gamma, sigma, &opts)?;
    let e = &model.eigen;
    let d = e.dim();
    let ev = &e.eigenvalues;
    let width = ev[d - 1] - ev[0];

    // β₁(ξ) = ∫ b₁(t) e^{-iξt} dt = -2i ∫₀^∞ b₁(t) sin(ξt) dt.
    let (gx, gw) = gauss_legendre(16);
    let t_max = 13.0 / sigma + 13.0;
    let t_panels = ((t_max * (2.0 * width + 1.0)).ceil() as usize).max(96);
    let mut t_nodes = Vec::with_capacity(t_panels * 16);
    let ht = t_max / t_panels as f64;
    for pnl in 0..t_panels {
        let mid = (pnl as f64 + 0.5) * ht;
        for (x, w) in gx.iter().zip(&gw) {
            let t = mid + 0.5 * ht * x;
            t_nodes.push((t, 0.5 * ht * w * b1_time(t, sigma)));
        }
    }
    let beta1 = |xi: f64| -> Complex64 {
        let s: f64 = t_nodes.iter().map(|&(t, wb)| wb * (xi * t).sin()).sum();
        Complex64::new(0.0, -2.0 * s)
    };

    // γ̂(2s + i) = (2π)^{-1/2} ∫ γ(ω) e^{ω} e^{-2isω} dω on panels over the
    // window of γ(ω) e^{ω}.
    let h = |w: f64| gamma.ln_eval(w) + w;
    let win = peak_window(&h, 0.0, 1.0).ok_or_else(|| {
        Error::InvalidArgument("weight times e^omega has no mass".into())
    })?;
    let s_max = 9.0 / sigma;
    let w_panel = (0.5 / (2.0 * s_max)).min(0.25);
    let cuts = panel_breaks(&[(win.lo, win.hi)], w_panel, &gamma.breakpoints());
    let mut om_nodes = Vec::new();
    for cut in &cuts {
        for pair in cut.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for (x, w) in gx.iter().zip(&gw) {
                let om = mid + half * x;
                om_nodes.push((om, half * w * (h(om) - win.max).exp()));
            }
        }
    }
    let gamma_hat = |s: f64| -> Complex64 {
        let acc: Complex64 = om_nodes
            .iter()
            .map(|&(om, w)| Complex64::from_polar(w, -2.0 * s * om))
            .sum();
        acc * (win.max.exp() / (2.0 * PI).sqrt())
    };
    let s_panel = (0.5 / (width + 1.0)).min(0.25);
    let s_panels = ((2.0 * s_max / s_panel).ceil() as usize).max(64);
    let hs = 2.0 * s_max / s_panels as f64;
    let mut s_nodes = Vec::with_capacity(s_panels * 16);
    for pnl in 0..s_panels {
        let mid = -s_max + (pnl as f64 + 0.5) * hs;
        for (x, w) in gx.iter().zip(&gw) {
            let s = mid + 0.5 * hs * x;
            let z = Complex64::new(2.0 * s, 1.0);
            let b2 = (z * z * (-0.25 * sigma * sigma)).exp()
                * gamma_hat(s)
                * (2.0 * PI.sqrt() * sigma);
            s_nodes.push((s, b2 * (0.5 * hs * w)));
        }
    }
    let beta2 = |zeta: f64| -> Complex64 {
        s_nodes
            .iter()
            .map(|&(s, wb)| wb * Complex64::from_polar(1.0, -zeta * s))
            .sum()
    };

    let mut b_eig = CMatrix::zeros(d, d);
    for a in model.jumps.operators() {
        let m = e.to_eigenbasis(a);
        for l in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    let nu = ev[i] - ev[j];
                    let nu_p = ev[i] - ev[l];
                    let x = m[(i, j)].conj() * m[(i, l)];
                    if x.norm() == 0.0 {
                        continue;
                    }
                    acc += x * beta1(nu_p - nu) * beta2(nu + nu_p);
                }
                b_eig[(j, l)] += acc;
            }
        }
    }
    let b_time = e.from_eigenbasis(&b_eig);
    let num: Complex64 = b_bohr
        .iter()
        .zip(b_time.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    let den = b_bohr.norm_squared();
    let factor = if den > 0.0 { num / den } else { Complex64::new(0.0, 0.0) };
    let residual = (&b_time - &b_bohr * factor).norm() / b_time.norm().max(f64::MIN_POSITIVE);
    Ok(CoherentCalibration {
        b_bohr,
        b_time,
        factor,
        residual,
    })
}
