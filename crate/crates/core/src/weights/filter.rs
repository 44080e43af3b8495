//! Gaussian time filter `f_σ(t) = σ^{1/2} π^{1/4} e^{-t²σ²/2}`.
//!
//! With the unitary Fourier convention `f̂(τ) = (2π)^{-1/2} ∫ f(t) e^{-iτt} dt`
//! the transform is again a Gaussian filter, `f̂_σ = f_{1/σ}`. The squared
//! `L²` norm of this filter is `π`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianFilter {
    sigma: f64,
}

impl GaussianFilter {
    pub fn new(sigma: f64) -> Result<GaussianFilter> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "filter width sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(GaussianFilter { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `f_σ(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let s = self.sigma;
        s.sqrt() * std::f64::consts::PI.powf(0.25) * (-0.5 * t * t * s * s).exp()
    }

    /// `f̂_σ(τ) = σ^{-1/2} π^{1/4} e^{-τ²/(2σ²)}`.
    pub fn hat(&self, tau: f64) -> f64 {
        self.ln_hat(tau).exp()
    }

    pub fn ln_hat(&self, tau: f64) -> f64 {
        let s = self.sigma;
        -0.5 * s.ln() + 0.25 * std::f64::consts::PI.ln() - 0.5 * tau * tau / (s * s)
    }

    /// The dual filter `f_{1/σ}`.
    pub fn dual(&self) -> GaussianFilter {
        GaussianFilter {
            sigma: 1.0 / self.sigma,
        }
    }

    /// `‖f_σ‖²_{L²}` in closed form.
    pub fn squared_norm(&self) -> f64 {
        std::f64::consts::PI
    }
}

/// Free-function form of [`GaussianFilter::eval`].
pub fn filter_eval(f: &GaussianFilter, t: f64) -> f64 {
    f.eval(t)
}

/// Free-function form of [`GaussianFilter::hat`].
pub fn filter_hat_eval(f: &GaussianFilter, tau: f64) -> f64 {
    f.hat(tau)
}
