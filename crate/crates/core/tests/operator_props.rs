use davies_lab::operator::{
    eig_hermitian, matrix_function, random, schatten_norm, superop_left, superop_right, unvec,
    vec_of, vectorize, devectorize, CMatrix,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn hermitian_reconstruction(seed in any::<u64>(), d in 2usize..=16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random::hermitian(&mut rng, d);
        let e = eig_hermitian(&h).unwrap();
        prop_assert!(rel(&e.reconstruct(), &h) <= 1e-10);
        prop_assert!(e.orthonormality_defect() <= 1e-12 * d as f64);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn exponential_inverse(seed in any::<u64>(), d in 2usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random::hermitian(&mut rng, d);
        let e = eig_hermitian(&h).unwrap();
        let a = matrix_function(&e, |x| Complex64::new(x.exp(), 0.0)).unwrap();
        let b = matrix_function(&e, |x| Complex64::new((-x).exp(), 0.0)).unwrap();
        let id = CMatrix::identity(d, d);
        prop_assert!((a * b - &id).norm() <= 1e-10 * (d as f64));
    }

    #[test]
    fn schatten_monotone(seed in any::<u64>(), d in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::complex_gaussian(&mut rng, d, d);
        let ps = [1.0, 1.5, 2.0, 3.0, 7.0, f64::INFINITY];
        let norms: Vec<f64> = ps.iter().map(|&p| schatten_norm(&m, p).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!((norms[2] - m.norm()).abs() <= 1e-10 * m.norm());
    }

    #[test]
    fn vectorization_round_trip(seed in any::<u64>(), d in 1usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::complex_gaussian(&mut rng, d, d);
        prop_assert_eq!(&unvec(&vec_of(&m), d), &m);
        prop_assert_eq!(&devectorize(&vectorize(&m).unwrap()).unwrap(), &m);
    }

    #[test]
    fn superoperator_factorisation(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::complex_gaussian(&mut rng, d, d);
        let x = random::complex_gaussian(&mut rng, d, d);
        let b = random::complex_gaussian(&mut rng, d, d);
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = superop_left(&a).unwrap() * superop_right(&b).unwrap() * vec_of(&x);
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1.0) * (d * d) as f64);
    }
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ],
    );
    assert!(eig_hermitian(&m).is_err());
    assert!(eig_hermitian(&CMatrix::zeros(2, 3)).is_err());
}
