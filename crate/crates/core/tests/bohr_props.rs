use davies_lab::bohr::{bohr_spectrum, decompose};
use davies_lab::operator::{eig_hermitian, matrix_function_real, random, CMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn components_sum_to_operator(seed in any::<u64>(), d in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random::hermitian(&mut rng, d);
        let a = random::complex_gaussian(&mut rng, d, d);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let dec = decompose(&a, &e, &s).unwrap();
        prop_assert!((dec.sum() - &a).norm() <= 1e-10 * a.norm());
        prop_assert!(s.frequencies.windows(2).all(|w| w[1] - w[0] > s.cluster_tol));
        for k in 0..s.len() {
            prop_assert_eq!(s.frequencies[k], -s.frequencies[s.negated(k)]);
        }
    }

    #[test]
    fn exponential_eigenoperator(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random::hermitian(&mut rng, d) * Complex64::new(0.5, 0.0);
        let a = random::complex_gaussian(&mut rng, d, d);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let dec = decompose(&a, &e, &s).unwrap();
        for sp in [-1.0, -0.5, 0.5, 1.0] {
            let fwd = matrix_function_real(&e, |x| (sp * x).exp()).unwrap();
            let back = matrix_function_real(&e, |x| (-sp * x).exp()).unwrap();
            for c in &dec.components {
                let lhs = &fwd * &c.matrix * &back;
                let rhs = &c.matrix * Complex64::new((sp * c.nu).exp(), 0.0);
                prop_assert!((&lhs - &rhs).norm() <= 1e-8 * rhs.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn adjoint_negates_frequencies(seed in any::<u64>(), d in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random::hermitian(&mut rng, d);
        let a = random::complex_gaussian(&mut rng, d, d);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let da = decompose(&a, &e, &s).unwrap();
        let dstar = decompose(&a.adjoint(), &e, &s).unwrap();
        let mut fa: Vec<usize> = da.components.iter().map(|c| s.negated(c.index)).collect();
        let mut fs: Vec<usize> = dstar.components.iter().map(|c| c.index).collect();
        fa.sort_unstable();
        fs.sort_unstable();
        prop_assert_eq!(fa, fs);
    }

    #[test]
    fn degenerate_block_rotation_leaves_components(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // P = diag(0, 0, 1, 2, 2) in a random basis.
        let levels = [0.0, 0.0, 1.0, 2.0, 2.0];
        let u = random::haar_unitary(&mut rng, 5);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            5,
            levels.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let p = &u * diag * u.adjoint();
        let p = (&p + p.adjoint()) * Complex64::new(0.5, 0.0);
        let a = random::complex_gaussian(&mut rng, 5, 5);
        let e = eig_hermitian(&p).unwrap();
        let s = bohr_spectrum(&e, 1e-9).unwrap();
        let dec = decompose(&a, &e, &s).unwrap();
        // Rotate within each degenerate block of the eigenvectors.
        let mut e2 = e.clone();
        let w1 = random::haar_unitary(&mut rng, 2);
        let w2 = random::haar_unitary(&mut rng, 2);
        let v = e.vectors.clone();
        let b1 = v.columns(0, 2) * &w1;
        let b2 = v.columns(3, 2) * &w2;
        e2.vectors.columns_mut(0, 2).copy_from(&b1);
        e2.vectors.columns_mut(3, 2).copy_from(&b2);
        let dec2 = decompose(&a, &e2, &s).unwrap();
        prop_assert_eq!(dec.components.len(), dec2.components.len());
        for (c1, c2) in dec.components.iter().zip(&dec2.components) {
            prop_assert_eq!(c1.index, c2.index);
            prop_assert!((&c1.matrix - &c2.matrix).norm() <= 1e-10 * a.norm());
        }
    }
}
