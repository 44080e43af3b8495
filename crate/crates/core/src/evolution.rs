//! Time evolution `ρ(t) = e^{t𝓛} ρ₀` with dense matrix exponentials, and
//! checks on the resulting channels.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generators::GeneratorBundle;
use crate::models::{gibbs_state, Model};
use crate::operator::{
    eig_hermitian, ensure_finite, ensure_square, hermitian_defect, hermitian_part, schatten_norm,
    unvec, vec_of, CMatrix,
};

/// Tolerance on Hermiticity of an accepted density matrix.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-9;
pub const DENSITY_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StateDiagnostics {
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn of(m: &CMatrix) -> StateDiagnostics {
        let tr: Complex64 = m.trace();
        let min_eigenvalue = eig_hermitian(&hermitian_part(m))
            .map(|e| e.eigenvalues[0])
            .unwrap_or(f64::NAN);
        StateDiagnostics {
            trace_defect: (tr - 1.0).norm(),
            hermiticity_defect: hermitian_defect(m),
            min_eigenvalue,
        }
    }

    pub fn is_state(&self) -> bool {
        self.trace_defect <= DENSITY_TRACE_TOL
            && self.hermiticity_defect <= DENSITY_HERMITIAN_TOL
            && self.min_eigenvalue >= -DENSITY_PSD_TOL
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    pub diagnostics: StateDiagnostics,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<DensityMatrix> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        let diagnostics = StateDiagnostics::of(&m);
        if diagnostics.hermiticity_defect > DENSITY_HERMITIAN_TOL {
            return Err(Error::NonHermitian {
                max_asymmetry: diagnostics.hermiticity_defect,
                tolerance: DENSITY_HERMITIAN_TOL,
            });
        }
        if diagnostics.trace_defect > DENSITY_TRACE_TOL {
            return Err(Error::CheckFailed {
                what: "unit trace".into(),
                deviation: diagnostics.trace_defect,
                tolerance: DENSITY_TRACE_TOL,
            });
        }
        if diagnostics.min_eigenvalue < -DENSITY_PSD_TOL {
            return Err(Error::CheckFailed {
                what: "positivity".into(),
                deviation: -diagnostics.min_eigenvalue,
                tolerance: DENSITY_PSD_TOL,
            });
        }
        Ok(DensityMatrix {
            matrix: hermitian_part(&m),
            diagnostics,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `½‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &CMatrix) -> f64 {
        trace_distance(&self.matrix, other)
    }
}

/// `½‖a - b‖₁`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * schatten_norm(&(a - b), 1.0).unwrap_or(f64::NAN)
}

/// States at the requested times with per-step diagnostics. States failing
/// the density-matrix checks are kept as computed and listed in `flagged`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub diagnostics: Vec<StateDiagnostics>,
    /// `½‖ρ(t) - e^{-P}/Z‖₁` at each time.
    pub gibbs_distance: Vec<f64>,
    /// Indices of states that fail the density-matrix checks.
    pub flagged: Vec<usize>,
}

impl Trajectory {
    pub fn worst_trace_defect(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_defect).fold(0.0, f64::max)
    }

    pub fn worst_hermiticity_defect(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.hermiticity_defect)
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Caches `e^{dt S}` by step length.
pub struct Propagator<'a> {
    generator: &'a CMatrix,
    cache: HashMap<u64, CMatrix>,
}

impl<'a> Propagator<'a> {
    pub fn new(generator: &'a CMatrix) -> Propagator<'a> {
        Propagator {
            generator,
            cache: HashMap::new(),
        }
    }

    pub fn step(&mut self, dt: f64) -> &CMatrix {
        let g = self.generator;
        self.cache
            .entry(dt.to_bits())
            .or_insert_with(|| (g * Complex64::new(dt, 0.0)).exp())
    }
}

/// Evolves `rho0` to each of the strictly increasing, nonnegative `times`.
pub fn evolve(bundle: &GeneratorBundle, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    Evolver::new(bundle)?.evolve(rho0, times)
}

/// Evolution under one bundle, reusing propagators across calls.
pub struct Evolver<'a> {
    bundle: &'a GeneratorBundle,
    propagator: Propagator<'a>,
    gibbs: CMatrix,
}

impl<'a> Evolver<'a> {
    pub fn new(bundle: &'a GeneratorBundle) -> Result<Evolver<'a>> {
        let e = &bundle.eigen;
        let lo = e.eigenvalues[0];
        let z: f64 = e.eigenvalues.iter().map(|x| (-(x - lo)).exp()).sum();
        let gibbs = crate::operator::matrix_function_real(e, |x| (-(x - lo)).exp() / z)?;
        Ok(Evolver {
            bundle,
            propagator: Propagator::new(&bundle.superoperator),
            gibbs,
        })
    }

    pub fn evolve(&mut self, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
        let d = self.bundle.dim;
        if rho0.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: rho0.dim(),
            });
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidArgument(
                "times must be finite, nonnegative and strictly increasing".into(),
            ));
        }
        let mut v = vec_of(rho0.matrix());
        let mut now = 0.0;
        let mut states = Vec::with_capacity(times.len());
        let mut diagnostics = Vec::with_capacity(times.len());
        let mut gibbs_distance = Vec::with_capacity(times.len());
        let mut flagged = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let dt = t - now;
            if dt > 0.0 {
                v = self.propagator.step(dt) * v;
                now = t;
            }
            let m = unvec(&v, d);
            if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite { row: 0, col: 0 });
            }
            let diag = StateDiagnostics::of(&m);
            if !diag.is_state() {
                flagged.push(k);
            }
            diagnostics.push(diag);
            gibbs_distance.push(trace_distance(&m, &self.gibbs));
            states.push(m);
        }
        Ok(Trajectory {
            times: times.to_vec(),
            states,
            diagnostics,
            gibbs_distance,
            flagged,
        })
    }
}

/// Slack allowed on contraction checks.
pub const CONTRACTION_TOL: f64 = 1e-9;

/// Trace distances `½‖e^{t𝓛}(ρ₁ - ρ₂)‖₁` for a batch of state pairs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// `distances[pair][k]` at `times[k]`.
    pub distances: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// Largest increase over the initial distance or over the previous time.
    pub worst_excess: f64,
    /// `(pair, time index)` where `worst_excess` occurs.
    pub witness: Option<(usize, usize)>,
    /// Largest `|tr ρ(t) - 1|` over all evolved states.
    pub worst_trace_defect: f64,
    pub min_eigenvalue: f64,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.worst_excess <= CONTRACTION_TOL
    }
}

pub fn contraction_check(
    bundle: &GeneratorBundle,
    pairs: &[(DensityMatrix, DensityMatrix)],
    times: &[f64],
) -> Result<ContractionReport> {
    let mut distances = Vec::with_capacity(pairs.len());
    let mut initial = Vec::with_capacity(pairs.len());
    let mut worst_excess = f64::NEG_INFINITY;
    let mut witness = None;
    let mut worst_trace_defect = 0.0_f64;
    let mut min_eigenvalue = f64::INFINITY;
    let mut ev = Evolver::new(bundle)?;
    for (p, (rho, sigma)) in pairs.iter().enumerate() {
        let a = ev.evolve(rho, times)?;
        let b = ev.evolve(sigma, times)?;
        for tr in [&a, &b] {
            worst_trace_defect = worst_trace_defect.max(tr.worst_trace_defect());
            min_eigenvalue = min_eigenvalue.min(tr.min_eigenvalue());
        }
        let d0 = rho.trace_distance(sigma.matrix());
        let ds: Vec<f64> = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| trace_distance(x, y))
            .collect();
        let mut prev = d0;
        for (k, &d) in ds.iter().enumerate() {
            let excess = (d - d0).max(d - prev);
            if excess > worst_excess {
                worst_excess = excess;
                witness = Some((p, k));
            }
            prev = d;
        }
        initial.push(d0);
        distances.push(ds);
    }
    Ok(ContractionReport {
        times: times.to_vec(),
        distances,
        initial,
        worst_excess,
        witness,
        worst_trace_defect,
        min_eigenvalue,
    })
}

/// Below this Choi eigenvalue the generator is considered broken.
pub const CHOI_FAIL: f64 = -1e-6;
/// Below this Choi eigenvalue a warning is raised.
pub const CHOI_WARN: f64 = -1e-8;

/// Choi matrix `C = Σ_{ij} E_ij ⊗ Φ(E_ij)` of `Φ = e^{t𝓛}`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub matrix: CMatrix,
    pub min_eigenvalue: f64,
    pub hermiticity_defect: f64,
    /// `max |tr Φ(E_ij) - δ_ij|`.
    pub trace_preservation_defect: f64,
    /// Minimum eigenvalue between `CHOI_FAIL` and `CHOI_WARN`.
    pub warning: bool,
}

/// Choi matrix of `e^{t𝓛}`; fails outright when its smallest eigenvalue is
/// below [`CHOI_FAIL`].
pub fn choi_matrix(bundle: &GeneratorBundle, t: f64) -> Result<ChoiMatrix> {
    let choi = choi_matrix_unchecked(bundle, t)?;
    if !(choi.min_eigenvalue >= CHOI_FAIL) {
        return Err(Error::CheckFailed {
            what: format!("complete positivity at t = {t}"),
            deviation: -choi.min_eigenvalue,
            tolerance: -CHOI_FAIL,
        });
    }
    Ok(choi)
}

pub fn choi_matrix_unchecked(bundle: &GeneratorBundle, t: f64) -> Result<ChoiMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad time {t}")));
    }
    if bundle.dim > 8 {
        return Err(Error::InvalidArgument(format!(
            "Choi matrix limited to dimension 8, got {}",
            bundle.dim
        )));
    }
    let prop = (&bundle.superoperator * Complex64::new(t, 0.0)).exp();
    Ok(choi_from_superoperator(&prop, bundle.dim))
}

/// Choi matrix of the channel whose column-stacked matrix is `prop`.
pub fn choi_from_superoperator(prop: &CMatrix, d: usize) -> ChoiMatrix {
    let matrix = CMatrix::from_fn(d * d, d * d, |r, s| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (s / d, s % d);
        prop[(a + b * d, i + j * d)]
    });
    let mut tp = 0.0_f64;
    for j in 0..d {
        for i in 0..d {
            let tr: Complex64 = (0..d).map(|a| prop[(a + a * d, i + j * d)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            tp = tp.max((tr - target).norm());
        }
    }
    let hermiticity_defect = hermitian_defect(&matrix);
    let min_eigenvalue = eig_hermitian(&hermitian_part(&matrix))
        .map(|e| e.eigenvalues[0])
        .unwrap_or(f64::NAN);
    ChoiMatrix {
        matrix,
        min_eigenvalue,
        hermiticity_defect,
        trace_preservation_defect: tp,
        warning: min_eigenvalue < CHOI_WARN && min_eigenvalue >= CHOI_FAIL,
    }
}

/// `½‖ρ - e^{-P}/tr e^{-P}‖₁`.
pub fn gibbs_distance(rho: &CMatrix, model: &Model) -> Result<f64> {
    let g = gibbs_state(model)?;
    Ok(trace_distance(rho, g.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;

    #[test]
    fn density_matrix_validation() {
        let ok = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(ok).is_ok());
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityMatrix::new(neg).is_err());
        let trace = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.6)]);
        assert!(DensityMatrix::new(trace).is_err());
        let skew = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.5), Complex64::new(0.0, 0.1), Complex64::new(0.0, 0.1), c(0.5)],
        );
        assert!(DensityMatrix::new(skew).is_err());
    }

    #[test]
    fn identity_channel_choi() {
        let d = 3;
        let prop = CMatrix::identity(d * d, d * d);
        let choi = choi_from_superoperator(&prop, d);
        // Unnormalised maximally entangled projector: eigenvalues {0, ..., 0, d}.
        assert!(choi.min_eigenvalue.abs() < 1e-12);
        assert!(choi.trace_preservation_defect == 0.0);
        assert!((choi.matrix.trace().re - d as f64).abs() < 1e-12);
    }

    #[test]
    fn transpose_map_is_not_completely_positive() {
        let d = 2;
        let swap = CMatrix::from_fn(d * d, d * d, |r, s| {
            let (i, j) = (r % d, r / d);
            if s == j + i * d {
                c(1.0)
            } else {
                c(0.0)
            }
        });
        let choi = choi_from_superoperator(&swap, d);
        assert!(choi.min_eigenvalue < -0.5);
    }
}
