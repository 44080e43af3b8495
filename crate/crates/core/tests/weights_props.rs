use std::f64::consts::PI;

use davies_lab::weights::quadrature::adaptive_trapezoid_split;
use davies_lab::weights::{
    b1_l1_limit, b1_l1_norm, balanced_gamma, kms_from_phi, kms_gamma, Kernels, KmsKind, Phi,
    QuadratureRule,
};
use proptest::prelude::*;

fn grid() -> Vec<f64> {
    (0..=400).map(|k| -20.0 + 0.1 * k as f64).collect()
}

#[test]
fn kms_weights_satisfy_detailed_balance() {
    for g in [kms_gamma(KmsKind::Glauber), kms_gamma(KmsKind::Metropolis)] {
        assert!(g.kms_defect(&grid()) <= 1e-12, "{}", g.label());
        assert!(g.min_sample(&grid()) > 0.0);
    }
    for phi in Phi::shipped() {
        let g = kms_from_phi(phi).unwrap();
        assert!(g.kms_defect(&grid()) <= 1e-12, "{}", g.label());
    }
}

#[test]
fn balanced_convolution_identity() {
    // (γ * G_σ)(τ) = e^{-τ} (γ * G_σ)(-τ) with G_σ(x) = σ^{-1}√π e^{-x²/σ²}.
    for phi in Phi::shipped() {
        for &s in &[0.5, 1.0, 2.0] {
            let k = Kernels::new(balanced_gamma(phi.clone(), s).unwrap(), s).unwrap();
            for i in 0..=16 {
                let tau = -4.0 + 0.5 * i as f64;
                let lhs = k.ln_j(tau).unwrap().ln_value;
                let rhs = -tau + k.ln_j(-tau).unwrap().ln_value;
                assert!((lhs - rhs).abs() <= 1e-9, "{} sigma {s} tau {tau}", phi.name());
            }
        }
    }
}

#[test]
fn gaussian_phi_convolution_closed_form() {
    // φ(u) = e^{-u²}: J(τ) = e^{σ²/16 - τ/2} √(πσ²/(1+σ²)) e^{-τ²/(1+σ²)}.
    for &s in &[0.3, 1.0, 2.5] {
        let k = Kernels::new(balanced_gamma(Phi::Gaussian, s).unwrap(), s).unwrap();
        let s2 = s * s;
        for i in 0..=20 {
            let tau = -10.0 + i as f64;
            let exact = s2 / 16.0 - 0.5 * tau + 0.5 * (PI * s2 / (1.0 + s2)).ln()
                - tau * tau / (1.0 + s2);
            let got = k.ln_j(tau).unwrap().ln_value;
            assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1.0), "{s} {tau}");
        }
    }
}

#[test]
fn peaked_quadrature_matches_romberg() {
    for phi in Phi::shipped() {
        let s = 0.8;
        let g = balanced_gamma(phi.clone(), s).unwrap();
        let k = Kernels::new(g.clone(), s).unwrap();
        for &c in &[-3.0, 0.0, 1.7] {
            let li = k.ln_j(c).unwrap();
            let oracle = adaptive_trapezoid_split(
                |w| g.eval(w) * (-(w - c) * (w - c) / (s * s)).exp(),
                c - 12.0 * s - 4.0,
                c + 12.0 * s + 4.0,
                &g.breakpoints(),
                1e-12,
                0.0,
            )
            .unwrap()
            .value;
            assert!((li.value() - oracle).abs() <= 1e-10 * oracle, "{} {c}", phi.name());
            assert!(li.rel_error <= 1e-10);
        }
    }
}

#[test]
fn gauss_hermite_oracle_for_overlap() {
    // With φ Gaussian the ω-integrand of G(ν,ν) is a Gaussian times e^{-ω/2};
    // a shifted Hermite rule integrates it to near machine precision.
    let s = 1.0;
    let g = balanced_gamma(Phi::Gaussian, s).unwrap();
    let k = Kernels::new(g.clone(), s).unwrap();
    for &nu in &[-1.0, 0.0, 0.5] {
        // f̂(ω-ν)² = σ^{-1}√π e^{-(ω-ν)²/σ²} is the Hermite weight itself.
        let rule = QuadratureRule::gauss_hermite_shifted(60, nu, s);
        let gh = rule.apply(|w| g.eval(w) * PI.sqrt() / s);
        let got = k.overlap(nu, nu).unwrap();
        assert!((gh - got).abs() <= 1e-9 * got, "{nu}: {gh} {got}");
    }
}

#[test]
fn functional_equation_for_every_shipped_weight() {
    for phi in Phi::shipped() {
        for &s in &[0.5, 1.0, 2.0] {
            let k = Kernels::new(balanced_gamma(phi.clone(), s).unwrap(), s).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    let t = -2.0 + 0.5 * i as f64;
                    let tp = -2.0 + 0.5 * j as f64;
                    let r = k.functional_equation_residual(t, tp).unwrap();
                    assert!(r <= 1e-9, "{} sigma {s} ({t}, {tp}): {r}", phi.name());
                }
            }
        }
    }
}

#[test]
fn b1_norm_approaches_constant_from_below() {
    let limit = b1_l1_limit();
    assert!((limit - PI.sqrt() / 32.0).abs() < 1e-17);
    let mut prev = 0.0;
    for &s in &[2.0, 1.0, 0.5, 0.25, 0.125] {
        let v = b1_l1_norm(s).unwrap();
        assert!(v <= limit && v > prev, "{s}: {v}");
        prev = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherent_kernel_is_hermitian(t in -4.0f64..4.0, tp in -4.0f64..4.0, s in 0.3f64..2.5) {
        let k = Kernels::new(balanced_gamma(Phi::Sech, s).unwrap(), s).unwrap();
        let a = k.b(t, tp).unwrap();
        let b = k.b(tp, t).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn overlap_is_symmetric_and_positive(n1 in -5.0f64..5.0, n2 in -5.0f64..5.0, s in 0.3f64..2.0) {
        let k = Kernels::new(balanced_gamma(Phi::ExpAbs, s).unwrap(), s).unwrap();
        let a = k.ln_overlap(n1, n2).unwrap();
        let b = k.ln_overlap(n2, n1).unwrap();
        prop_assert_eq!(a, b);
        let direct = k.ln_overlap_direct(n1, n2).unwrap();
        prop_assert!((a - direct).abs() <= 1e-8);
        // Cauchy–Schwarz in L²(γ dω).
        let bound = 0.5 * (k.ln_overlap(n1, n1).unwrap() + k.ln_overlap(n2, n2).unwrap());
        prop_assert!(a <= bound + 1e-12);
    }
}
