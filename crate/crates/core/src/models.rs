//! Test systems: random finite models, a truncated oscillator, and finite
//! difference discretisations of Schrödinger operators on a line and a torus.
//!
//! Every model is shifted so that the smallest eigenvalue of `P` is exactly 1.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::evolution::DensityMatrix;
use crate::generators::JumpFamily;
use crate::operator::{
    c, eig_hermitian, ensure_finite, hermitian_part, matrix_function_real, random, symmetrize_checked,
    CMatrix, EigenSystem,
};

/// How a model was built, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Provenance {
    Random {
        dim: usize,
        jump_pairs: usize,
        seed: u64,
        spectrum: Option<Vec<f64>>,
    },
    Oscillator {
        dim: usize,
    },
    SchrodingerLine {
        n: usize,
        half_width: f64,
        potential: Potential,
        jumps: Vec<[f64; 4]>,
    },
    Torus {
        n: usize,
        length: f64,
        stiffness: Coefficient,
        potential: Potential,
        jumps: Vec<TorusJump>,
    },
    Explicit,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub id: String,
    pub p: CMatrix,
    pub eigen: EigenSystem,
    pub jumps: JumpFamily,
    pub provenance: Provenance,
    /// Constant added to the raw operator so that `min spec P = 1`.
    pub shift: f64,
    pub truncation_note: Option<String>,
}

impl Model {
    /// Builds a model from an explicit Hermitian `P` and jump operators
    /// (closed under adjoints by adding missing partners when `close` is set).
    pub fn from_parts(
        id: &str,
        p: CMatrix,
        jumps: Vec<CMatrix>,
        close: bool,
        provenance: Provenance,
    ) -> Result<Model> {
        ensure_finite(&p)?;
        let p = symmetrize_checked(&p)?;
        let raw = eig_hermitian(&p)?;
        let shift = 1.0 - raw.eigenvalues[0];
        let eigen = raw.shifted(shift);
        let d = p.nrows();
        let p = p + CMatrix::identity(d, d) * c(shift);
        let jumps = if close {
            JumpFamily::closed(jumps)?
        } else {
            JumpFamily::new(jumps)?
        };
        if jumps.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: jumps.dim(),
            });
        }
        Ok(Model {
            id: id.to_string(),
            p,
            eigen,
            jumps,
            provenance,
            shift,
            truncation_note: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn spectral_width(&self) -> f64 {
        let e = &self.eigen.eigenvalues;
        e[e.len() - 1] - e[0]
    }
}

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(x)),
    ))
}

/// Random model: `P = U diag(λ) U†` with Haar `U`, and `jump_pairs` complex
/// Gaussian jumps (scaled by `1/√dim`) together with their adjoints. Without
/// an explicit spectrum the eigenvalues are uniform on `[0, dim]`.
pub fn random_model(
    dim: usize,
    jump_pairs: usize,
    spectrum: Option<&[f64]>,
    seed: u64,
) -> Result<Model> {
    if dim == 0 || jump_pairs == 0 {
        return Err(Error::InvalidArgument(
            "random model needs dim >= 1 and at least one jump pair".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda: Vec<f64> = match spectrum {
        Some(s) if s.len() != dim => {
            return Err(Error::DimMismatch {
                expected: dim,
                found: s.len(),
            })
        }
        Some(s) => s.to_vec(),
        None => {
            let u = Uniform::new(0.0, dim as f64).expect("valid range");
            (0..dim).map(|_| u.sample(&mut rng)).collect()
        }
    };
    let u = random::haar_unitary(&mut rng, dim);
    let p = hermitian_part(&(&u * diag(&lambda) * u.adjoint()));
    let scale = c(1.0 / (dim as f64).sqrt());
    let jumps: Vec<CMatrix> = (0..jump_pairs)
        .flat_map(|_| {
            let a = random::complex_gaussian(&mut rng, dim, dim) * scale;
            [a.adjoint(), a]
        })
        .collect();
    let mut m = Model::from_parts(
        &format!("random{dim}"),
        p,
        jumps,
        false,
        Provenance::Random {
            dim,
            jump_pairs,
            seed,
            spectrum: spectrum.map(<[f64]>::to_vec),
        },
    )?;
    m.id = format!("random{dim}-s{seed}");
    Ok(m)
}

/// Two-level system `P = diag(0, 1)` (shifted to `diag(1, 2)`) with `σ_x`.
pub fn qubit_model() -> Result<Model> {
    let sx = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    Model::from_parts("qubit", diag(&[0.0, 1.0]), vec![sx], false, Provenance::Explicit)
}

/// Lowering operator on the first `dim` Fock states.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    a
}

/// Truncated oscillator `P = diag(1, ..., dim)` with jumps `{a, a†}`.
pub fn oscillator_model(dim: usize) -> Result<Model> {
    if dim < 2 {
        return Err(Error::InvalidArgument("oscillator needs dim >= 2".into()));
    }
    let levels: Vec<f64> = (1..=dim).map(|k| k as f64).collect();
    let a = annihilation(dim);
    let mut m = Model::from_parts(
        &format!("osc{dim}"),
        diag(&levels),
        vec![a.clone(), a.adjoint()],
        false,
        Provenance::Oscillator { dim },
    )?;
    m.truncation_note = Some(format!(
        "Fock space truncated to {dim} levels; a a† differs from a† a + 1 in the top level"
    ));
    Ok(m)
}

/// Potential on grid points.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Zero,
    /// `scale · x²`.
    Quadratic { scale: f64 },
    /// `scale · x⁴`.
    Quartic { scale: f64 },
    /// `amplitude · cos(2πx / period)`.
    Cosine { amplitude: f64, period: f64 },
    /// Values at the grid points, in order.
    Tabulated { values: Vec<f64> },
}

impl Potential {
    fn sample(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            Potential::Zero => vec![0.0; xs.len()],
            Potential::Quadratic { scale } => xs.iter().map(|x| scale * x * x).collect(),
            Potential::Quartic { scale } => xs.iter().map(|x| scale * x.powi(4)).collect(),
            Potential::Cosine { amplitude, period } => xs
                .iter()
                .map(|x| amplitude * (2.0 * PI * x / period).cos())
                .collect(),
            Potential::Tabulated { values } => {
                if values.len() != xs.len() {
                    return Err(Error::DimMismatch {
                        expected: xs.len(),
                        found: values.len(),
                    });
                }
                values.clone()
            }
        };
        if let Some(k) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteFunction { eigenvalue: xs[k] });
        }
        Ok(v)
    }

    /// Value at an arbitrary point, when the potential is given by a formula.
    fn at(&self, x: f64) -> Option<f64> {
        match self {
            Potential::Tabulated { .. } => None,
            other => other.sample(&[x]).ok().map(|v| v[0]),
        }
    }
}

/// Confinement test on `[-L, L]`: the potential at the walls must rise above
/// its minimum by at least twice the median rise over the grid.
pub fn is_confining(potential: &Potential, xs: &[f64], half_width: f64) -> Result<bool> {
    let v = potential.sample(xs)?;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let wall = match (potential.at(-half_width), potential.at(half_width)) {
        (Some(a), Some(b)) => a.min(b),
        _ => v[0].min(v[v.len() - 1]),
    };
    Ok(wall - min > 2.0 * (median - min) && wall > min)
}

/// Smallest grid accepted by [`schrodinger_line_model`].
pub const LINE_MIN_N: usize = 16;

fn line_grid(n: usize, half_width: f64) -> (Vec<f64>, f64) {
    let h = 2.0 * half_width / (n + 1) as f64;
    ((1..=n).map(|k| -half_width + k as f64 * h).collect(), h)
}

/// `-Δ + V` on `n` interior points of `[-L, L]` with Dirichlet walls, and
/// jumps `A = a₁ ∂ₓ + a₂ x` (central differences) closed under adjoints.
/// Each jump is given as `[Re a₁, Im a₁, Re a₂, Im a₂]`.
pub fn schrodinger_line_model(
    n: usize,
    half_width: f64,
    potential: Potential,
    jumps: &[[f64; 4]],
) -> Result<Model> {
    if n < LINE_MIN_N || !(half_width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "line model needs n >= {LINE_MIN_N} and a positive half width"
        )));
    }
    if jumps.is_empty() {
        return Err(Error::InvalidArgument("line model needs at least one jump".into()));
    }
    let (xs, h) = line_grid(n, half_width);
    let v = potential.sample(&xs)?;
    if !is_confining(&potential, &xs, half_width)? {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::InvalidArgument(format!(
            "potential does not confine on [-{half_width}, {half_width}]: \
             boundary values {:.6e}, {:.6e}, interior minimum {min:.6e}",
            v[0],
            v[n - 1]
        )));
    }
    let mut p = CMatrix::zeros(n, n);
    let mut dx = CMatrix::zeros(n, n);
    for k in 0..n {
        p[(k, k)] = c(2.0 / (h * h) + v[k]);
        if k + 1 < n {
            p[(k, k + 1)] = c(-1.0 / (h * h));
            p[(k + 1, k)] = c(-1.0 / (h * h));
            dx[(k, k + 1)] = c(0.5 / h);
            dx[(k + 1, k)] = c(-0.5 / h);
        }
    }
    let x = diag(&xs);
    let ops: Vec<CMatrix> = jumps
        .iter()
        .map(|j| {
            &dx * Complex64::new(j[0], j[1]) + &x * Complex64::new(j[2], j[3])
        })
        .collect();
    let mut m = Model::from_parts(
        &format!("schr{n}"),
        p,
        ops,
        true,
        Provenance::SchrodingerLine {
            n,
            half_width,
            potential,
            jumps: jumps.to_vec(),
        },
    )?;
    m.truncation_note = Some(format!(
        "second-order finite differences, {n} interior points, spacing {h:.6}"
    ));
    Ok(m)
}

/// Default line jump `(∂ₓ + x)/√2`.
pub fn default_line_jumps() -> Vec<[f64; 4]> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![[r, 0.0, r, 0.0]]
}

/// Periodic coefficient `p(x) > 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficient {
    Constant { value: f64 },
    /// `mean + amplitude · cos(2πx / length)`.
    Cosine { mean: f64, amplitude: f64 },
    Tabulated { values: Vec<f64> },
}

impl Coefficient {
    fn sample(&self, xs: &[f64], length: f64) -> Result<Vec<f64>> {
        let v: Vec<f64> = match self {
            Coefficient::Constant { value } => vec![*value; xs.len()],
            Coefficient::Cosine { mean, amplitude } => xs
                .iter()
                .map(|x| mean + amplitude * (2.0 * PI * x / length).cos())
                .collect(),
            Coefficient::Tabulated { values } => {
                if values.len() != xs.len() {
                    return Err(Error::DimMismatch {
                        expected: xs.len(),
                        found: values.len(),
                    });
                }
                values.clone()
            }
        };
        if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidArgument(
                "stiffness coefficient must be positive and finite".into(),
            ));
        }
        Ok(v)
    }
}

/// Torus jump `a ∂ₓ + b(x)` with `b(x) = b₀ + b₁ cos(2πx / length)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusJump {
    pub a: [f64; 2],
    pub b0: [f64; 2],
    pub b1: [f64; 2],
}

/// Smallest grid accepted by [`torus_model`].
pub const TORUS_MIN_N: usize = 8;

/// `-∂ₓ p ∂ₓ + V` on a periodic grid of `n` points over `[0, length)`,
/// discretised in divergence form with `p` at half-integer points.
pub fn torus_model(
    n: usize,
    length: f64,
    stiffness: Coefficient,
    potential: Potential,
    jumps: &[TorusJump],
) -> Result<Model> {
    if n < TORUS_MIN_N {
        return Err(Error::InvalidArgument(format!(
            "torus grid needs at least {TORUS_MIN_N} points, got {n}"
        )));
    }
    if !(length > 0.0) || jumps.is_empty() {
        return Err(Error::InvalidArgument(
            "torus needs a positive length and at least one jump".into(),
        ));
    }
    let h = length / n as f64;
    let xs: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    let mids: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
    let pm = stiffness.sample(&mids, length)?;
    let v = potential.sample(&xs)?;
    let mut p = CMatrix::zeros(n, n);
    let mut dx = CMatrix::zeros(n, n);
    for k in 0..n {
        let next = (k + 1) % n;
        let prev = (k + n - 1) % n;
        // p[k] sits between k and k+1.
        p[(k, k)] += c((pm[k] + pm[prev]) / (h * h) + v[k]);
        p[(k, next)] -= c(pm[k] / (h * h));
        p[(next, k)] -= c(pm[k] / (h * h));
        dx[(k, next)] += c(0.5 / h);
        dx[(k, prev)] -= c(0.5 / h);
    }
    let ops: Vec<CMatrix> = jumps
        .iter()
        .map(|j| {
            let b: Vec<Complex64> = xs
                .iter()
                .map(|x| {
                    Complex64::new(j.b0[0], j.b0[1])
                        + Complex64::new(j.b1[0], j.b1[1]) * (2.0 * PI * x / length).cos()
                })
                .collect();
            &dx * Complex64::new(j.a[0], j.a[1])
                + CMatrix::from_diagonal(&DVector::from_vec(b))
        })
        .collect();
    let mut m = Model::from_parts(
        &format!("torus{n}"),
        p,
        ops,
        true,
        Provenance::Torus {
            n,
            length,
            stiffness,
            potential,
            jumps: jumps.to_vec(),
        },
    )?;
    m.truncation_note = Some(format!("periodic finite differences, {n} points, spacing {h:.6}"));
    Ok(m)
}

/// Default torus jump `∂ₓ + (0.5 + 0.5 cos)`.
pub fn default_torus_jumps() -> Vec<TorusJump> {
    vec![TorusJump {
        a: [1.0, 0.0],
        b0: [0.5, 0.0],
        b1: [0.5, 0.0],
    }]
}

/// Rebuilds a model from its provenance.
pub fn rebuild(p: &Provenance) -> Result<Model> {
    match p {
        Provenance::Random {
            dim,
            jump_pairs,
            seed,
            spectrum,
        } => random_model(*dim, *jump_pairs, spectrum.as_deref(), *seed),
        Provenance::Oscillator { dim } => oscillator_model(*dim),
        Provenance::SchrodingerLine {
            n,
            half_width,
            potential,
            jumps,
        } => schrodinger_line_model(*n, *half_width, potential.clone(), jumps),
        Provenance::Torus {
            n,
            length,
            stiffness,
            potential,
            jumps,
        } => torus_model(*n, *length, stiffness.clone(), potential.clone(), jumps),
        Provenance::Explicit => Err(Error::InvalidArgument(
            "explicit models carry no recipe".into(),
        )),
    }
}

/// `e^{-P} / tr e^{-P}`, computed from the shifted spectrum.
pub fn gibbs_state(model: &Model) -> Result<DensityMatrix> {
    let lo = model.eigen.eigenvalues[0];
    let z: f64 = model.eigen.eigenvalues.iter().map(|x| (-(x - lo)).exp()).sum();
    let rho = matrix_function_real(&model.eigen, |x| (-(x - lo)).exp() / z)?;
    DensityMatrix::new(rho)
}

/// Spectrum used by the six-level random benchmark.
pub const RANDOM6_SPECTRUM: [f64; 6] = [0.0, 0.5, 2.0, 5.0, 6.0, 8.5];

/// Named benchmark models.
pub fn benchmark(name: &str) -> Result<Model> {
    match name {
        "qubit" => qubit_model(),
        "osc4" => oscillator_model(4),
        "osc6" => oscillator_model(6),
        "random6" => random_model(6, 2, Some(&RANDOM6_SPECTRUM), 7),
        "schr16" => schrodinger_line_model(
            16,
            4.0,
            Potential::Quadratic { scale: 1.0 },
            &default_line_jumps(),
        ),
        "torus12" => torus_model(
            12,
            1.0,
            Coefficient::Cosine {
                mean: 1.0,
                amplitude: 0.3,
            },
            Potential::Cosine {
                amplitude: 5.0,
                period: 1.0,
            },
            &default_torus_jumps(),
        ),
        other => Err(Error::InvalidArgument(format!("unknown benchmark model {other}"))),
    }
}

/// Names accepted by [`benchmark`].
pub const BENCHMARKS: [&str; 6] = ["qubit", "osc4", "osc6", "random6", "schr16", "torus12"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_abs;

    #[test]
    fn shift_puts_ground_level_at_one() {
        for name in BENCHMARKS {
            let m = benchmark(name).unwrap();
            assert!((m.eigen.eigenvalues[0] - 1.0).abs() < 1e-12, "{name}");
            assert!(m.jumps.closed_under_adjoint(), "{name}");
            let again = eig_hermitian(&m.p).unwrap();
            assert!((again.eigenvalues[0] - 1.0).abs() < 1e-9, "{name}");
        }
    }

    #[test]
    fn random_model_is_reproducible() {
        let a = random_model(4, 2, None, 11).unwrap();
        let b = random_model(4, 2, None, 11).unwrap();
        assert_eq!(a.p, b.p);
        assert_eq!(a.jumps.operators(), b.jumps.operators());
        let spec = [0.0, 1.0];
        let q = random_model(2, 1, Some(&spec), 3).unwrap();
        assert!((q.eigen.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oscillator_ladder() {
        let m = oscillator_model(5).unwrap();
        let a = &m.jumps.operators()[0];
        let comm = &m.p * a - a * &m.p;
        assert!((comm + a).norm() < 1e-14);
        assert!(m.truncation_note.is_some());
    }

    #[test]
    fn line_harmonic_levels() {
        let m = schrodinger_line_model(
            64,
            8.0,
            Potential::Quadratic { scale: 1.0 },
            &default_line_jumps(),
        )
        .unwrap();
        let e = &m.eigen.eigenvalues;
        for k in 0..2 {
            let gap = e[k + 1] - e[k];
            assert!((gap - 2.0).abs() < 0.04, "gap {k}: {gap}");
        }
        // Default jump is not Hermitian, so closure adds its adjoint.
        assert_eq!(m.jumps.len(), 2);
    }

    #[test]
    fn line_rejects_flat_potential() {
        let r = schrodinger_line_model(16, 4.0, Potential::Zero, &default_line_jumps());
        assert!(r.is_err());
    }

    #[test]
    fn line_hermitian_jump_needs_no_partner() {
        // A = x is Hermitian.
        let m = schrodinger_line_model(
            16,
            4.0,
            Potential::Quadratic { scale: 1.0 },
            &[[0.0, 0.0, 1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(m.jumps.len(), 1);
    }

    #[test]
    fn flat_torus_matches_discrete_fourier_modes() {
        let n = 16;
        let m = torus_model(
            n,
            1.0,
            Coefficient::Constant { value: 1.0 },
            Potential::Zero,
            &default_torus_jumps(),
        )
        .unwrap();
        let mut expect: Vec<f64> = (0..n)
            .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos()) * (n * n) as f64 + m.shift)
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in m.eigen.eigenvalues.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn torus_constant_jump_is_hermitian() {
        let m = torus_model(
            8,
            1.0,
            Coefficient::Constant { value: 1.0 },
            Potential::Zero,
            &[TorusJump {
                a: [0.0, 0.0],
                b0: [0.7, 0.0],
                b1: [0.0, 0.0],
            }],
        )
        .unwrap();
        assert_eq!(m.jumps.len(), 1);
        assert!(torus_model(
            6,
            1.0,
            Coefficient::Constant { value: 1.0 },
            Potential::Zero,
            &default_torus_jumps()
        )
        .is_err());
    }

    #[test]
    fn gibbs_populations_for_two_levels() {
        let m = qubit_model().unwrap();
        let g = gibbs_state(&m).unwrap();
        let p0 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((g.matrix()[(0, 0)].re - p0).abs() < 1e-15);
        assert!((g.matrix()[(1, 1)].re - (1.0 - p0)).abs() < 1e-15);
        assert!(max_abs(&(g.matrix() - g.matrix().adjoint())) == 0.0);
    }

    #[test]
    fn provenance_rebuilds() {
        for name in ["osc4", "random6", "schr16", "torus12"] {
            let m = benchmark(name).unwrap();
            let r = rebuild(&m.provenance).unwrap();
            assert_eq!(m.p, r.p, "{name}");
        }
    }
}
