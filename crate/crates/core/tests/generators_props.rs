use davies_lab::generators::{
    assemble_localised, davies_dissipator, AssemblyOptions, AssemblyPath, TRACE_TOL,
};
use davies_lab::models::{random_model, Model};
use davies_lab::operator::{random, CMatrix};
use davies_lab::weights::{balanced_gamma, kms_gamma, KmsKind, Phi};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn phi_strategy() -> impl Strategy<Value = Phi> {
    prop_oneof![Just(Phi::Gaussian), Just(Phi::Sech), Just(Phi::ExpAbs)]
}

fn model(seed: u64, d: usize) -> Model {
    random_model(d, 2, None, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn davies_gibbs_is_stationary(seed in any::<u64>(), d in 2usize..=6, metro in any::<bool>()) {
        let m = model(seed, d);
        let kind = if metro { KmsKind::Metropolis } else { KmsKind::Glauber };
        let b = davies_dissipator(&m, &kms_gamma(kind), &AssemblyOptions::default()).unwrap();
        prop_assert!(b.stationarity().residual_fro <= 1e-12);
        prop_assert!(b.trace_defect <= TRACE_TOL);
    }

    #[test]
    fn localised_gibbs_is_stationary(
        seed in any::<u64>(),
        d in 2usize..=5,
        sigma in 0.3f64..2.5,
        phi in phi_strategy(),
    ) {
        let m = model(seed, d);
        let g = balanced_gamma(phi, sigma).unwrap();
        let b = assemble_localised(&m, &g, sigma, &AssemblyOptions::default()).unwrap();
        let r = b.stationarity();
        prop_assert!(r.residual_fro <= 1e-9, "{}", r.residual_fro);
        prop_assert!(r.recombination_defect <= 1e-12);
        prop_assert!(b.trace_defect <= TRACE_TOL);
    }

    #[test]
    fn hermiticity_is_preserved(seed in any::<u64>(), d in 2usize..=5, sigma in 0.4f64..2.0) {
        let m = model(seed, d);
        let g = balanced_gamma(Phi::Gaussian, sigma).unwrap();
        let b = assemble_localised(&m, &g, sigma, &AssemblyOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
        let t = random::complex_gaussian(&mut rng, d, d);
        let lhs = b.apply(&t.adjoint());
        let rhs = b.apply(&t).adjoint();
        prop_assert!((&lhs - &rhs).norm() <= 1e-11 * b.superoperator.norm() * t.norm());
    }

    #[test]
    fn assembly_paths_agree(seed in any::<u64>(), d in 2usize..=4, sigma in 0.4f64..2.0) {
        let m = model(seed, d);
        let g = balanced_gamma(Phi::Sech, sigma).unwrap();
        let a = assemble_localised(&m, &g, sigma, &AssemblyOptions::default()).unwrap();
        let b = assemble_localised(
            &m,
            &g,
            sigma,
            &AssemblyOptions::with_path(AssemblyPath::OmegaQuadrature),
        )
        .unwrap();
        let rel = (&a.superoperator - &b.superoperator).norm() / a.superoperator.norm();
        prop_assert!(rel <= 1e-8, "{rel}");
    }
}

#[test]
fn trace_of_image_vanishes() {
    let m = model(3, 4);
    let g = balanced_gamma(Phi::Gaussian, 0.9).unwrap();
    let b = assemble_localised(&m, &g, 0.9, &AssemblyOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let t: CMatrix = random::complex_gaussian(&mut rng, 4, 4);
        assert!(b.apply(&t).trace().norm() <= 1e-12 * b.superoperator.norm() * t.norm());
    }
}
