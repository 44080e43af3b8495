//! Scalar kernels built from a weight `γ` and the Gaussian filter of width `σ`.
//!
//! Every integral here has the form `∫ γ(ω) e^{-(ω-c)²/σ²} e^{λω} dω` and is
//! evaluated with [`integrate_peaked`] in log form. The basic moment is
//!
//! ```text
//! J(c) = ∫ γ(ω) e^{-(ω-c)²/σ²} dω
//! ```
//!
//! in terms of which
//!
//! * `b̂₂(ζ) = e^{-ζ/2} J(-ζ/2)`,
//! * `G(ν,ν') = σ^{-1} √π e^{-(ν-ν')²/4σ²} J((ν+ν')/2)`,
//! * `A(ζ) = ∫ γ(ω) e^{-ω²/σ²} e^{-ζω/σ²} dω = e^{ζ²/4σ²} J(-ζ/2)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;

use super::filter::GaussianFilter;
use super::gamma::WeightSpec;
use super::quadrature::{gauss_legendre, integrate_peaked, LogIntegral};
use crate::error::{Error, Result};

/// Relative error estimate above which an integral is rejected.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// `b̂₁(ξ) = e^{-ξ²/4σ²} tanh(ξ/4) / (4σ√π i)`; purely imaginary and odd.
pub fn b1_hat(xi: f64, sigma: f64) -> Complex64 {
    let mag = (-xi * xi / (4.0 * sigma * sigma)).exp() * (0.25 * xi).tanh()
        / (4.0 * sigma * PI.sqrt());
    Complex64::new(0.0, -mag)
}

/// Gaussian integrals of one weight at one filter width, with `J` cached by center.
pub struct Kernels {
    weight: WeightSpec,
    filter: GaussianFilter,
    breakpoints: Vec<f64>,
    cache: Mutex<HashMap<u64, LogIntegral>>,
}

impl std::fmt::Debug for Kernels {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernels")
            .field("weight", &self.weight)
            .field("sigma", &self.filter.sigma())
            .finish()
    }
}

fn checked(li: LogIntegral, what: impl FnOnce() -> String) -> Result<LogIntegral> {
    if li.ln_value.is_nan() || li.rel_error > QUADRATURE_TOL {
        return Err(Error::Quadrature {
            what: what(),
            estimate: li.rel_error,
        });
    }
    Ok(li)
}

impl Kernels {
    pub fn new(weight: WeightSpec, sigma: f64) -> Result<Kernels> {
        let filter = GaussianFilter::new(sigma)?;
        let breakpoints = weight.breakpoints();
        Ok(Kernels {
            weight,
            filter,
            breakpoints,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.filter.sigma()
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn filter(&self) -> &GaussianFilter {
        &self.filter
    }

    /// `ln J(c)`.
    pub fn ln_j(&self, center: f64) -> Result<LogIntegral> {
        let key = center.to_bits();
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(*v);
        }
        let s = self.sigma();
        let inv = 1.0 / (s * s);
        let g = &self.weight;
        let li = integrate_peaked(
            |w| {
                let d = w - center;
                g.ln_eval(w) - d * d * inv
            },
            center,
            s,
            &self.breakpoints,
        );
        let li = checked(li, || format!("J({center})"))?;
        self.cache.lock().expect("cache poisoned").insert(key, li);
        Ok(li)
    }

    /// `b̂₂(ζ) = e^{-ζ/2} ∫ γ(ω) e^{-(ω+ζ/2)²/σ²} dω`.
    pub fn b2_hat(&self, zeta: f64) -> Result<f64> {
        Ok((-0.5 * zeta + self.ln_j(-0.5 * zeta)?.ln_value).exp())
    }

    /// `b(τ,τ') = 2π b̂₁(τ-τ') b̂₂(τ+τ')`; satisfies `conj(b(τ,τ')) = b(τ',τ)`.
    pub fn b(&self, tau: f64, tau_p: f64) -> Result<Complex64> {
        let xi = tau - tau_p;
        if xi == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let b1 = b1_hat(xi, self.sigma());
        Ok(b1 * (2.0 * PI * self.b2_hat(tau + tau_p)?))
    }

    /// `ln G(ν,ν')` from the Gaussian product rule.
    pub fn ln_overlap(&self, nu: f64, nu_p: f64) -> Result<f64> {
        let s = self.sigma();
        let d = nu - nu_p;
        Ok(0.5 * PI.ln() - s.ln() - d * d / (4.0 * s * s) + self.ln_j(0.5 * (nu + nu_p))?.ln_value)
    }

    pub fn overlap(&self, nu: f64, nu_p: f64) -> Result<f64> {
        Ok(self.ln_overlap(nu, nu_p)?.exp())
    }

    /// `ln ∫ γ(ω) f̂(ω-ν) f̂(ω-ν') dω` integrated as written, without the
    /// product rule.
    pub fn ln_overlap_direct(&self, nu: f64, nu_p: f64) -> Result<f64> {
        Ok(self.ln_filter_pair(-nu, -nu_p)?.ln_value)
    }

    /// `ln ∫ γ(ω) f̂(ω+a) f̂(ω+b) dω`.
    fn ln_filter_pair(&self, a: f64, b: f64) -> Result<LogIntegral> {
        let f = &self.filter;
        let g = &self.weight;
        let li = integrate_peaked(
            |w| g.ln_eval(w) + f.ln_hat(w + a) + f.ln_hat(w + b),
            -0.5 * (a + b),
            self.sigma(),
            &self.breakpoints,
        );
        checked(li, || format!("filter pair ({a}, {b})"))
    }

    /// `F(τ,τ') = ∫ γ(ω) [e^{-τ'} f̂(ω+τ) f̂(ω+τ') - ½(1+e^{τ-τ'}) f̂(ω-τ) f̂(ω-τ')] dω`
    /// by direct quadrature of both filter products.
    pub fn f_direct(&self, tau: f64, tau_p: f64) -> Result<f64> {
        let plus = self.ln_filter_pair(tau, tau_p)?.ln_value;
        let minus = self.ln_filter_pair(-tau, -tau_p)?.ln_value;
        let c = 0.5 * (1.0 + (tau - tau_p).exp());
        Ok((plus - tau_p).exp() - c * minus.exp())
    }

    /// `ln A(ζ)` with `A(ζ) = ∫ γ(ω) e^{-ω²/σ²} e^{-ζω/σ²} dω`, integrated directly.
    pub fn ln_a(&self, zeta: f64) -> Result<f64> {
        let s2 = self.sigma() * self.sigma();
        let g = &self.weight;
        let li = integrate_peaked(
            |w| g.ln_eval(w) - (w * w + zeta * w) / s2,
            -0.5 * zeta,
            self.sigma(),
            &self.breakpoints,
        );
        Ok(checked(li, || format!("A({zeta})"))?.ln_value)
    }

    /// Relative defect of the divisibility identity `A(-ζ) = e^{-ζ/2} A(ζ)`.
    pub fn divisibility_defect(&self, zeta: f64) -> Result<f64> {
        let lhs = self.ln_a(-zeta)?;
        let rhs = -0.5 * zeta + self.ln_a(zeta)?;
        Ok((lhs - rhs).exp_m1().abs())
    }

    /// `F` in closed form through `A`, with `ξ = τ-τ'` and `ζ = τ+τ'`.
    pub fn f_closed(&self, tau: f64, tau_p: f64) -> Result<f64> {
        let s = self.sigma();
        let xi = tau - tau_p;
        let zeta = tau + tau_p;
        let base = 0.5 * PI.ln() - s.ln() - (zeta * zeta + xi * xi) / (4.0 * s * s);
        let first = base - 0.5 * (zeta - xi) + self.ln_a(zeta)?;
        let second = base + (0.5 * (1.0 + xi.exp())).ln() + self.ln_a(-zeta)?;
        Ok(first.exp() - second.exp())
    }

    /// `|F(τ,τ') - i(1 - e^{τ-τ'}) b(τ,τ')| / (1 + |F|)`, with `F` from direct
    /// quadrature and `b` from `J`.
    pub fn functional_equation_residual(&self, tau: f64, tau_p: f64) -> Result<f64> {
        let f = self.f_direct(tau, tau_p)?;
        let rhs = Complex64::new(0.0, 1.0) * (1.0 - (tau - tau_p).exp()) * self.b(tau, tau_p)?;
        Ok((Complex64::new(f, 0.0) - rhs).norm() / (1.0 + f.abs()))
    }
}

/// Free-function form of [`Kernels::b2_hat`].
pub fn b2_hat(zeta: f64, sigma: f64, gamma: &WeightSpec) -> Result<f64> {
    Kernels::new(gamma.clone(), sigma)?.b2_hat(zeta)
}

/// Free-function form of [`Kernels::b`].
pub fn b_kernel(tau: f64, tau_p: f64, sigma: f64, gamma: &WeightSpec) -> Result<Complex64> {
    Kernels::new(gamma.clone(), sigma)?.b(tau, tau_p)
}

/// Free-function form of [`Kernels::f_direct`].
pub fn f_kernel(tau: f64, tau_p: f64, sigma: f64, gamma: &WeightSpec) -> Result<f64> {
    Kernels::new(gamma.clone(), sigma)?.f_direct(tau, tau_p)
}

/// Free-function form of [`Kernels::f_closed`].
pub fn f_closed(tau: f64, tau_p: f64, sigma: f64, gamma: &WeightSpec) -> Result<f64> {
    Kernels::new(gamma.clone(), sigma)?.f_closed(tau, tau_p)
}

/// Free-function form of [`Kernels::functional_equation_residual`].
pub fn functional_equation_residual(
    tau: f64,
    tau_p: f64,
    sigma: f64,
    gamma: &WeightSpec,
) -> Result<f64> {
    Kernels::new(gamma.clone(), sigma)?.functional_equation_residual(tau, tau_p)
}

/// Composite Gauss–Legendre sum of `f` over `[a, b]` split into `panels`.
fn legendre_sum<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += 0.5 * h * wi * f(mid + 0.5 * h * xi);
        }
    }
    total
}

/// `e^{-σ²(t²+s²)} sinh(2σ²ts)`, accurate for both small and large arguments.
fn sinh_gaussian(t: f64, s: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let x = 2.0 * s2 * t * s;
    if x.abs() < 1.0 {
        (-s2 * (t * t + s * s)).exp() * x.sinh()
    } else {
        0.5 * ((-s2 * (t - s) * (t - s)).exp() - (-s2 * (t + s) * (t + s)).exp())
    }
}

/// Time-domain kernel
/// `b₁(t) = (√π/8) ∫₀^∞ [e^{-σ²(t+s)²} - e^{-σ²(t-s)²}] / sinh(2πs) ds`,
/// evaluated in the equivalent form `-(√π/4) ∫₀^∞ e^{-σ²(t²+s²)} sinh(2σ²ts) / sinh(2πs) ds`.
pub fn b1_time(t: f64, sigma: f64) -> f64 {
    b1_time_with(t, sigma, 32, 16)
}

fn b1_time_with(t: f64, sigma: f64, panels: usize, order: usize) -> f64 {
    // sinh(2πs) > e^{2πs}/3 beyond s = 1, so s ≤ 14 loses less than e^{-80}.
    let integral = legendre_sum(
        |s| sinh_gaussian(t, s, sigma) / (2.0 * PI * s).sinh(),
        0.0,
        14.0,
        panels,
        order,
    );
    -0.25 * PI.sqrt() * integral
}

/// `‖b₁‖_{L¹}` by quadrature of `|b₁(t)|` over the real line (`b₁` is odd).
pub fn b1_l1_norm(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    // |b₁(t)| ≤ C e^{-σ²t²/2} for t beyond the bulk.
    let t_max = 13.0 / sigma + 13.0;
    let coarse = 2.0 * legendre_sum(|t| b1_time_with(t, sigma, 32, 16).abs(), 0.0, t_max, 96, 16);
    let fine = 2.0 * legendre_sum(|t| b1_time_with(t, sigma, 64, 16).abs(), 0.0, t_max, 192, 16);
    let estimate = (coarse - fine).abs() / fine;
    if estimate > QUADRATURE_TOL {
        return Err(Error::Quadrature {
            what: format!("b1 L1 norm at sigma {sigma}"),
            estimate,
        });
    }
    Ok(fine)
}

/// Limiting value `√π / 32` of `‖b₁‖_{L¹}` as `σ → 0`.
pub fn b1_l1_limit() -> f64 {
    PI.sqrt() / 32.0
}
