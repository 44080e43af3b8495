//! Dense complex linear algebra used by every other module.
//!
//! Operators are `nalgebra` matrices of `Complex64`. Superoperators act on
//! column-stacked vectorizations: `vec(T)[i + j*d] = T[(i, j)]`, so that
//! `vec(A T B) = (Bᵀ ⊗ A) vec(T)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn ensure_same_dim(a: &CMatrix, b: &CMatrix) -> Result<usize> {
    let d = ensure_square(a)?;
    let e = ensure_square(b)?;
    if d != e {
        return Err(Error::DimMismatch {
            expected: d,
            found: e,
        });
    }
    Ok(d)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest `|M_ij - conj(M_ji)|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let d = m.nrows().min(m.ncols());
    let mut worst = 0.0_f64;
    for j in 0..d {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†)/2`, exact Hermitian output.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Checks Hermiticity within [`HERMITIAN_TOL`] (relative to the largest entry)
/// and returns the symmetrized matrix.
pub fn symmetrize_checked(m: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let tolerance = HERMITIAN_TOL * max_abs(m).max(1.0);
    let max_asymmetry = hermitian_defect(m);
    if max_asymmetry > tolerance {
        return Err(Error::NonHermitian {
            max_asymmetry,
            tolerance,
        });
    }
    Ok(hermitian_part(m))
}

/// Spectral decomposition `H = U diag(λ) U†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..d {
            let lam = self.eigenvalues[j];
            scaled.column_mut(j).scale_mut(lam);
        }
        scaled * self.vectors.adjoint()
    }

    /// `U† M U`: expresses `m` in the eigenbasis.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * m * &self.vectors
    }

    /// `U M U†`: maps an eigenbasis matrix back to the original basis.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// Same eigenvectors, eigenvalues shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> EigenSystem {
        EigenSystem {
            eigenvalues: self.eigenvalues.iter().map(|e| e + delta).collect(),
            vectors: self.vectors.clone(),
        }
    }

    /// Largest deviation of `U†U` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let d = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..d {
            for i in 0..d {
                let target = if i == j { c(1.0) } else { c(0.0) };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Hermitian eigendecomposition. Inputs within the Hermiticity tolerance are
/// symmetrized first; anything else is rejected.
pub fn eig_hermitian(h: &CMatrix) -> Result<EigenSystem> {
    let sym = symmetrize_checked(h)?;
    let d = sym.nrows();
    if d == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenSystem {
        eigenvalues,
        vectors,
    })
}

/// `U f(Λ) U†` for a complex-valued spectral function.
pub fn matrix_function<F>(e: &EigenSystem, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> Complex64,
{
    let d = e.dim();
    let mut scaled = e.vectors.clone();
    for j in 0..d {
        let lam = e.eigenvalues[j];
        let v = f(lam);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteFunction { eigenvalue: lam });
        }
        for i in 0..d {
            scaled[(i, j)] *= v;
        }
    }
    Ok(scaled * e.vectors.adjoint())
}

/// Real spectral function; the result is exactly Hermitian.
pub fn matrix_function_real<F>(e: &EigenSystem, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> f64,
{
    let m = matrix_function(e, |x| c(f(x)))?;
    Ok(hermitian_part(&m))
}

/// Schatten `p`-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Schatten index must lie in [1, inf], got {p}"
        )));
    }
    ensure_finite(m)?;
    let sv = m.clone().singular_values();
    Ok(lp_norm(sv.iter().copied(), p))
}

/// Schatten norm of a Hermitian matrix from its eigenvalues; cheaper and more
/// accurate than going through the SVD.
pub fn schatten_norm_hermitian(m: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Schatten index must lie in [1, inf], got {p}"
        )));
    }
    let e = eig_hermitian(m)?;
    Ok(lp_norm(e.eigenvalues.iter().map(|x| x.abs()), p))
}

fn lp_norm(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else if p == 1.0 {
        values.sum()
    } else {
        let v: Vec<f64> = values.collect();
        let scale = v.iter().copied().fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|x| (x / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_same_dim(a, b)?;
    Ok(a * b - b * a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_same_dim(a, b)?;
    Ok(a * b + b * a)
}

/// Column-stacked `dim²` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedOperator {
    pub dim: usize,
    pub data: CVector,
}

pub fn vectorize(m: &CMatrix) -> Result<VectorizedOperator> {
    let dim = ensure_square(m)?;
    Ok(VectorizedOperator {
        dim,
        data: CVector::from_column_slice(m.as_slice()),
    })
}

pub fn devectorize(v: &VectorizedOperator) -> Result<CMatrix> {
    if v.data.len() != v.dim * v.dim {
        return Err(Error::DimMismatch {
            expected: v.dim * v.dim,
            found: v.data.len(),
        });
    }
    Ok(CMatrix::from_column_slice(v.dim, v.dim, v.data.as_slice()))
}

/// Convenience: `vec(M)` as a plain vector.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &CVector, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// `S` with `S vec(T) = vec(A T)`.
pub fn superop_left(a: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(a)?;
    Ok(CMatrix::identity(d, d).kronecker(a))
}

/// `S` with `S vec(T) = vec(T A)`.
pub fn superop_right(a: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(a)?;
    Ok(a.transpose().kronecker(&CMatrix::identity(d, d)))
}

/// Frobenius norm of `a - b` divided by the Frobenius norm of `b` (or 1 when `b = 0`).
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = b.norm();
    let diff = (a - b).norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Random matrices for test harnesses and model builders.
pub mod random {
    use super::*;

    pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
    }

    /// Ginibre-based GUE-like Hermitian matrix.
    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
        let g = complex_gaussian(rng, d, d);
        hermitian_part(&g)
    }

    /// Haar-distributed unitary from the QR of a Ginibre matrix with phase fix.
    pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
        let g = complex_gaussian(rng, d, d);
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..d {
            let rjj = r[(j, j)];
            let phase = if rjj.norm() > 0.0 {
                rjj / rjj.norm()
            } else {
                c(1.0)
            };
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    /// Random density matrix `G G† / tr(G G†)`.
    pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
        let g = complex_gaussian(rng, d, d);
        let m = &g * g.adjoint();
        let tr = m.trace();
        hermitian_part(&(m / tr))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }
    fn sy() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0), -I, I, c(0.0)])
    }
    fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
    }

    #[test]
    fn diagonal_is_already_decomposed() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0)]));
        let e = eig_hermitian(&h).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0, 1.0]);
        let proj0 = e.vectors.column(0) * e.vectors.column(0).adjoint();
        assert_abs_diff_eq!(proj0[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let e = eig_hermitian(&sx()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random::hermitian(&mut rng, 8);
        let e = eig_hermitian(&h).unwrap();
        assert!(relative_frobenius(&e.reconstruct(), &h) <= 1e-12);
        assert!(e.orthonormality_defect() <= 1e-12 * 8.0);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian_and_non_finite() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.5), c(0.0)]);
        match eig_hermitian(&m) {
            Err(Error::NonHermitian { max_asymmetry, .. }) => {
                assert_abs_diff_eq!(max_asymmetry, 0.5, epsilon = 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut n = sx();
        n[(0, 0)] = c(f64::NAN);
        assert!(matches!(eig_hermitian(&n), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn matrix_functions() {
        let zero = CMatrix::zeros(3, 3);
        let e = eig_hermitian(&zero).unwrap();
        let id = matrix_function_real(&e, f64::exp).unwrap();
        assert!(relative_frobenius(&id, &CMatrix::identity(3, 3)) < 1e-15);

        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(1.0)]));
        let e = eig_hermitian(&h).unwrap();
        let g = matrix_function_real(&e, |x| (-x).exp()).unwrap();
        assert_abs_diff_eq!(g[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(1, 1)].re, 0.36787944117144233, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random::hermitian(&mut rng, 6);
        let e = eig_hermitian(&h).unwrap();
        let back = matrix_function_real(&e, |x| x).unwrap();
        assert!(relative_frobenius(&back, &h) <= 1e-12);

        let err = matrix_function_real(&e, |x| if x > 0.0 { f64::INFINITY } else { 0.0 });
        assert!(matches!(err, Err(Error::NonFiniteFunction { .. })));
    }

    #[test]
    fn schatten_examples() {
        let id = CMatrix::identity(5, 5);
        assert_abs_diff_eq!(schatten_norm(&id, 1.0).unwrap(), 5.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            schatten_norm(&sx(), 2.0).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-14
        );
        assert!(schatten_norm(&sx(), 0.5).is_err());
    }

    #[test]
    fn schatten_matches_independent_singular_values() {
        // Oracle: singular values are square roots of the eigenvalues of M†M.
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let m = random::complex_gaussian(&mut rng, 6, 6);
        let gram = m.adjoint() * &m;
        let e = eig_hermitian(&gram).unwrap();
        let sv: Vec<f64> = e.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let oracle = if p.is_infinite() {
                sv.iter().copied().fold(0.0, f64::max)
            } else {
                sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p)
            };
            let got = schatten_norm(&m, p).unwrap();
            assert!((got - oracle).abs() <= 1e-10 * oracle, "p={p}");
        }
        assert!((schatten_norm(&m, 2.0).unwrap() - m.norm()).abs() <= 1e-12 * m.norm());
    }

    #[test]
    fn commutator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random::complex_gaussian(&mut rng, 3, 3);
        let id = CMatrix::identity(3, 3);
        assert_eq!(commutator(&id, &m).unwrap().norm(), 0.0);
        assert!(relative_frobenius(&anticommutator(&id, &m).unwrap(), &(&m * c(2.0))) < 1e-15);
        let lhs = commutator(&sx(), &sy()).unwrap();
        let rhs = sz() * (I * 2.0);
        assert!((lhs - rhs).norm() < 1e-15);
        assert!(commutator(&id, &CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn superoperator_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random::complex_gaussian(&mut rng, 3, 3);
        let b = random::complex_gaussian(&mut rng, 3, 3);
        let t = random::complex_gaussian(&mut rng, 3, 3);
        let id = superop_left(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(id, CMatrix::identity(9, 9));
        let left = superop_left(&a).unwrap() * vec_of(&t);
        assert!((left - vec_of(&(&a * &t))).norm() <= 1e-12 * (&a * &t).norm());
        let right = superop_right(&b).unwrap() * vec_of(&t);
        assert!((right - vec_of(&(&t * &b))).norm() <= 1e-12 * (&t * &b).norm());
        let both = superop_right(&b).unwrap() * superop_left(&a).unwrap() * vec_of(&t);
        let direct = &a * &t * &b;
        assert!((both - vec_of(&direct)).norm() <= 1e-12 * direct.norm());
    }
}
