//! Bohr spectrum of `P` and fixed-frequency components `A_ν` of operators.
//!
//! `A_ν` collects the eigenbasis entries `(i, j)` of `A` with `E_i - E_j = ν`,
//! so that `[P, A_ν] = ν A_ν`. Differences closer than `cluster_tol` are merged.

use crate::error::{Error, Result};
use crate::operator::{ensure_square, CMatrix, EigenSystem};

/// Sorted, negation-symmetric set of eigenvalue differences.
#[derive(Debug, Clone)]
pub struct BohrSpectrum {
    pub frequencies: Vec<f64>,
    pub cluster_tol: f64,
    /// `membership[i + j * dim]` is the index of the cluster holding `E_i - E_j`.
    pub membership: Vec<usize>,
    pub dim: usize,
    /// Largest spread `max - min` of raw differences inside one cluster.
    pub max_diameter: f64,
}

impl BohrSpectrum {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Cluster index of `E_i - E_j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        self.membership[i + j * self.dim]
    }

    pub fn frequency(&self, i: usize, j: usize) -> f64 {
        self.frequencies[self.index(i, j)]
    }

    /// Index of `-ν` given the index of `ν`.
    pub fn negated(&self, k: usize) -> usize {
        self.frequencies.len() - 1 - k
    }

    pub fn zero_index(&self) -> usize {
        self.frequencies.len() / 2
    }

    /// Index of the cluster containing `nu`, if any representative lies within
    /// `max(cluster_tol, 1e-12 |nu|)`.
    pub fn find(&self, nu: f64) -> Option<usize> {
        let pos = self.frequencies.partition_point(|&x| x < nu);
        let tol = self.cluster_tol.max(1e-12 * nu.abs()).max(self.max_diameter);
        [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter(|&k| k < self.frequencies.len())
            .min_by(|&a, &b| {
                (self.frequencies[a] - nu)
                    .abs()
                    .total_cmp(&(self.frequencies[b] - nu).abs())
            })
            .filter(|&k| (self.frequencies[k] - nu).abs() <= tol)
    }

    fn same_as(&self, other: &BohrSpectrum) -> bool {
        self.dim == other.dim
            && self.membership == other.membership
            && self.frequencies.len() == other.frequencies.len()
            && self
                .frequencies
                .iter()
                .zip(&other.frequencies)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Default clustering tolerance: `1e-9` times the spectral width (or `1e-9`
/// for a degenerate spectrum).
pub fn default_cluster_tol(e: &EigenSystem) -> f64 {
    let lo = e.eigenvalues.first().copied().unwrap_or(0.0);
    let hi = e.eigenvalues.last().copied().unwrap_or(0.0);
    1e-9 * (hi - lo).max(1.0)
}

/// Clusters all pairwise differences `E_i - E_j` by single linkage: sorted
/// nonnegative differences separated by more than `cluster_tol` start a new
/// cluster. The cluster containing 0 is represented by exactly 0, the others
/// by their mean; negative differences are mirrored.
pub fn bohr_spectrum(e: &EigenSystem, cluster_tol: f64) -> Result<BohrSpectrum> {
    if !(cluster_tol >= 0.0) || !cluster_tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cluster tolerance must be a finite nonnegative number, got {cluster_tol}"
        )));
    }
    let d = e.dim();
    let ev = &e.eigenvalues;
    // Nonnegative differences: E_i - E_j with i >= j (eigenvalues ascending).
    let mut diffs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in j..d {
            diffs.push(((ev[i] - ev[j]).max(0.0), i, j));
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut cluster_of = vec![0usize; diffs.len()];
    let mut reps: Vec<f64> = Vec::new();
    let mut max_diameter = 0.0_f64;
    let mut start = 0;
    while start < diffs.len() {
        let mut end = start + 1;
        while end < diffs.len() && diffs[end].0 - diffs[end - 1].0 <= cluster_tol {
            end += 1;
        }
        let k = reps.len();
        let members = &diffs[start..end];
        let rep = if k == 0 {
            0.0
        } else {
            members.iter().map(|m| m.0).sum::<f64>() / members.len() as f64
        };
        max_diameter = max_diameter.max(members[members.len() - 1].0 - members[0].0);
        reps.push(rep);
        for slot in cluster_of.iter_mut().take(end).skip(start) {
            *slot = k;
        }
        start = end;
    }

    // Layout: [-reps[m-1], ..., -reps[1], 0, reps[1], ..., reps[m-1]].
    let m = reps.len();
    let zero = m - 1;
    let mut frequencies = Vec::with_capacity(2 * m - 1);
    for k in (1..m).rev() {
        frequencies.push(-reps[k]);
    }
    frequencies.extend(reps.iter().copied());
    let mut membership = vec![0usize; d * d];
    for (n, &(_, i, j)) in diffs.iter().enumerate() {
        let k = cluster_of[n];
        membership[i + j * d] = zero + k;
        membership[j + i * d] = zero - k;
    }
    Ok(BohrSpectrum {
        frequencies,
        cluster_tol,
        membership,
        dim: d,
        max_diameter,
    })
}

/// One fixed-frequency component.
#[derive(Debug, Clone)]
pub struct BohrComponent {
    /// Index into the spectrum's frequency list.
    pub index: usize,
    pub nu: f64,
    /// `A_ν` in the original basis.
    pub matrix: CMatrix,
}

/// Components `A_ν` of an operator, plus its eigenbasis form for fast assembly.
#[derive(Debug, Clone)]
pub struct BohrDecomposition {
    pub source: CMatrix,
    /// `U† A U`; entry `(i, j)` belongs to frequency `spectrum.index(i, j)`.
    pub eigenbasis: CMatrix,
    pub components: Vec<BohrComponent>,
    pub spectrum: BohrSpectrum,
}

impl BohrDecomposition {
    /// Component at spectrum index `k`, if it survived the drop threshold.
    pub fn component(&self, k: usize) -> Option<&BohrComponent> {
        self.components.iter().find(|c| c.index == k)
    }

    /// `Σ_ν A_ν`.
    pub fn sum(&self) -> CMatrix {
        let d = self.source.nrows();
        self.components
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, c| acc + &c.matrix)
    }

    /// Bound on `‖[P, A_ν] - ν A_ν‖_F` implied by clustering, relative to `‖A‖_F`.
    pub fn eigenoperator_tolerance(&self) -> f64 {
        self.spectrum.max_diameter.max(1e-10)
    }
}

/// Splits `a` into its Bohr components with respect to `e` and `s`.
pub fn decompose(a: &CMatrix, e: &EigenSystem, s: &BohrSpectrum) -> Result<BohrDecomposition> {
    let d = ensure_square(a)?;
    if d != e.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            found: d,
        });
    }
    if s.dim != d || s.membership.len() != d * d {
        return Err(Error::SpectrumMismatch);
    }
    for j in 0..d {
        for i in 0..d {
            let nu = e.eigenvalues[i] - e.eigenvalues[j];
            let rep = s.frequency(i, j);
            if (nu - rep).abs() > s.max_diameter + s.cluster_tol + 1e-12 * nu.abs().max(1.0) {
                return Err(Error::SpectrumMismatch);
            }
        }
    }
    let m = e.to_eigenbasis(a);
    let norm = a.norm();
    let mut buckets: Vec<Option<CMatrix>> = vec![None; s.len()];
    for j in 0..d {
        for i in 0..d {
            let z = m[(i, j)];
            if z.re == 0.0 && z.im == 0.0 {
                continue;
            }
            let k = s.index(i, j);
            buckets[k].get_or_insert_with(|| CMatrix::zeros(d, d))[(i, j)] = z;
        }
    }
    let components = buckets
        .into_iter()
        .enumerate()
        .filter_map(|(k, b)| b.map(|b| (k, b)))
        .filter(|(_, b)| b.norm() >= 1e-14 * norm)
        .map(|(k, b)| BohrComponent {
            index: k,
            nu: s.frequencies[k],
            matrix: e.from_eigenbasis(&b),
        })
        .collect();
    Ok(BohrDecomposition {
        source: a.clone(),
        eigenbasis: m,
        components,
        spectrum: s.clone(),
    })
}

/// `max_ν ‖A_{-ν} - ((A*)_ν)†‖_F` for a decomposition of `A` and one of `A*`.
pub fn adjoint_component_check(a: &BohrDecomposition, a_star: &BohrDecomposition) -> Result<f64> {
    if !a.spectrum.same_as(&a_star.spectrum) {
        return Err(Error::SpectrumMismatch);
    }
    let s = &a.spectrum;
    let d = a.source.nrows();
    let zero = CMatrix::zeros(d, d);
    let mut worst = 0.0_f64;
    for k in 0..s.len() {
        let lhs = a.component(s.negated(k)).map_or(&zero, |c| &c.matrix);
        let rhs = a_star
            .component(k)
            .map_or(zero.clone(), |c| c.matrix.adjoint());
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c, eig_hermitian, random};
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| c(x)),
        ))
    }

    fn sigma_x() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    #[test]
    fn qubit_spectrum() {
        let e = eig_hermitian(&diag(&[0.0, 1.0])).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        assert_eq!(s.frequencies, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn ladder_spectrum() {
        let e = eig_hermitian(&diag(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        assert_eq!(s.frequencies, vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn near_degenerate_pair_is_merged() {
        let e = eig_hermitian(&diag(&[0.0, 1.0, 1.0 + 1e-13])).unwrap();
        let s = bohr_spectrum(&e, 1e-10).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.frequencies[1], 0.0);
        assert!((s.frequencies[2] - 1.0).abs() < 1e-12);
        assert_eq!(s.frequencies[0], -s.frequencies[2]);
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let e = eig_hermitian(&diag(&[0.0, 1.0])).unwrap();
        assert!(bohr_spectrum(&e, -1.0).is_err());
    }

    #[test]
    fn qubit_sigma_x_components() {
        let delta = 0.7;
        let e = eig_hermitian(&diag(&[0.0, delta])).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let dec = decompose(&sigma_x(), &e, &s).unwrap();
        assert_eq!(dec.components.len(), 2);
        let up = dec.component(s.find(delta).unwrap()).unwrap();
        assert!((up.matrix[(1, 0)] - c(1.0)).norm() < 1e-15);
        assert!(up.matrix[(0, 1)].norm() < 1e-15);
        let down = dec.component(s.find(-delta).unwrap()).unwrap();
        assert!((down.matrix[(0, 1)] - c(1.0)).norm() < 1e-15);
        assert!(dec.component(s.zero_index()).is_none());
    }

    #[test]
    fn identity_has_only_zero_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random::hermitian(&mut rng, 5);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let dec = decompose(&CMatrix::identity(5, 5), &e, &s).unwrap();
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.components[0].nu, 0.0);
        assert!((&dec.components[0].matrix - CMatrix::identity(5, 5)).norm() < 1e-13);
    }

    #[test]
    fn random_reconstruction_and_eigenoperator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random::hermitian(&mut rng, 6);
        let a = random::complex_gaussian(&mut rng, 6, 6);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let dec = decompose(&a, &e, &s).unwrap();
        assert!((dec.sum() - &a).norm() <= 1e-12 * a.norm());
        for comp in &dec.components {
            let lhs = &p * &comp.matrix - &comp.matrix * &p - &comp.matrix * c(comp.nu);
            assert!(lhs.norm() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn adjoint_checks() {
        let e = eig_hermitian(&diag(&[0.0, 1.0])).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let sx = decompose(&sigma_x(), &e, &s).unwrap();
        assert_eq!(adjoint_component_check(&sx, &sx).unwrap(), 0.0);
        let lower = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let a = decompose(&lower, &e, &s).unwrap();
        let b = decompose(&lower.adjoint(), &e, &s).unwrap();
        assert!(adjoint_component_check(&a, &b).unwrap() <= 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random::hermitian(&mut rng, 5);
        let m = random::complex_gaussian(&mut rng, 5, 5);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let a = decompose(&m, &e, &s).unwrap();
        let b = decompose(&m.adjoint(), &e, &s).unwrap();
        assert!(adjoint_component_check(&a, &b).unwrap() <= 1e-12);
    }

    #[test]
    fn mismatched_spectra_are_rejected() {
        let e1 = eig_hermitian(&diag(&[0.0, 1.0])).unwrap();
        let e2 = eig_hermitian(&diag(&[0.0, 2.0])).unwrap();
        let s1 = bohr_spectrum(&e1, 1e-9).unwrap();
        let s2 = bohr_spectrum(&e2, 1e-9).unwrap();
        let a = decompose(&sigma_x(), &e1, &s1).unwrap();
        let b = decompose(&sigma_x(), &e2, &s2).unwrap();
        assert_eq!(adjoint_component_check(&a, &b), Err(Error::SpectrumMismatch));
        assert!(decompose(&sigma_x(), &e1, &s2).is_err());
    }

    #[test]
    fn degenerate_block_rotation_leaves_components_invariant() {
        let p = diag(&[0.0, 1.0, 1.0, 2.5]);
        let e1 = eig_hermitian(&p).unwrap();
        let mut e2 = e1.clone();
        let (ct, st) = (0.6_f64, 0.8_f64);
        let phase = Complex64::from_polar(1.0, 0.3);
        let mut rot = CMatrix::identity(4, 4);
        rot[(1, 1)] = c(ct);
        rot[(1, 2)] = -phase.conj() * st;
        rot[(2, 1)] = phase * st;
        rot[(2, 2)] = c(ct);
        e2.vectors = &e1.vectors * rot;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random::complex_gaussian(&mut rng, 4, 4);
        let s1 = bohr_spectrum(&e1, 1e-9).unwrap();
        let s2 = bohr_spectrum(&e2, 1e-9).unwrap();
        let d1 = decompose(&a, &e1, &s1).unwrap();
        let d2 = decompose(&a, &e2, &s2).unwrap();
        for comp in &d1.components {
            let other = d2.component(comp.index).unwrap();
            assert!((&comp.matrix - &other.matrix).norm() <= 1e-10 * a.norm());
        }
    }
}
