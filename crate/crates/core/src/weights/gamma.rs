//! Weight functions `γ(ω) ≥ 0`.
//!
//! Two families are supported. KMS weights satisfy `γ(-ω) = e^ω γ(ω)` and
//! feed the Davies generator. Balanced weights `γ(ω) = e^{-ω/2} φ(ω + σ²/4)`,
//! with `φ` even, feed the Gaussian-filtered generator of width `σ`.
//!
//! Every weight is evaluated in log form so that tails far beyond the range of
//! `f64` stay usable inside Gaussian integrals.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Even profile `φ` used by balanced weights.
#[derive(Clone)]
pub enum Phi {
    /// `e^{-ω²}`.
    Gaussian,
    /// `1 / cosh(ω)`.
    Sech,
    /// `e^{-|ω|}`.
    ExpAbs,
    /// User-supplied profile; validated by sampling.
    Custom { name: String, f: ScalarFn },
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Phi {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: &str, f: F) -> Phi {
        Phi::Custom {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn from_name(name: &str) -> Option<Phi> {
        match name {
            "gaussian" => Some(Phi::Gaussian),
            "sech" => Some(Phi::Sech),
            "exp_abs" => Some(Phi::ExpAbs),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Phi::Gaussian => "gaussian",
            Phi::Sech => "sech",
            Phi::ExpAbs => "exp_abs",
            Phi::Custom { name, .. } => name,
        }
    }

    pub fn shipped() -> [Phi; 3] {
        [Phi::Gaussian, Phi::Sech, Phi::ExpAbs]
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Phi::Custom { f, .. } => f(x),
            _ => self.ln_eval(x).exp(),
        }
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        match self {
            Phi::Gaussian => -x * x,
            Phi::Sech => {
                let a = x.abs();
                -(a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
            }
            Phi::ExpAbs => -x.abs(),
            Phi::Custom { f, .. } => f(x).ln(),
        }
    }

    /// Points where `φ` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Phi::ExpAbs => vec![0.0],
            _ => Vec::new(),
        }
    }
}

/// Which construction produced a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    KmsGlauber,
    KmsMetropolis,
    /// `e^{-ω/2} φ(ω)`: the `σ → 0` member of a balanced family.
    KmsFromPhi,
    BalancedFromPhi,
    /// `e^{-ω/2} φ(ω + s)` with a shift other than `σ²/4`.
    ShiftedPhi,
    Custom,
}

#[derive(Clone)]
enum Form {
    Glauber,
    Metropolis,
    Phi { phi: Phi, shift: f64 },
    Custom { f: ScalarFn, breakpoints: Vec<f64> },
}

/// A weight function with its provenance.
#[derive(Clone)]
pub struct WeightSpec {
    kind: WeightKind,
    sigma: Option<f64>,
    form: Form,
    label: String,
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec")
            .field("kind", &self.kind)
            .field("sigma", &self.sigma)
            .field("label", &self.label)
            .finish()
    }
}

/// Which closed-form KMS weight to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KmsKind {
    Glauber,
    Metropolis,
}

impl KmsKind {
    pub fn from_name(name: &str) -> Option<KmsKind> {
        match name {
            "glauber" | "kms_glauber" => Some(KmsKind::Glauber),
            "metropolis" | "kms_metropolis" => Some(KmsKind::Metropolis),
            _ => None,
        }
    }
}

/// `γ(ω) = 1/(1+e^ω)` or `min(1, e^{-ω})`.
pub fn kms_gamma(kind: KmsKind) -> WeightSpec {
    match kind {
        KmsKind::Glauber => WeightSpec {
            kind: WeightKind::KmsGlauber,
            sigma: None,
            form: Form::Glauber,
            label: "glauber".into(),
        },
        KmsKind::Metropolis => WeightSpec {
            kind: WeightKind::KmsMetropolis,
            sigma: None,
            form: Form::Metropolis,
            label: "metropolis".into(),
        },
    }
}

/// `γ(ω) = e^{-ω/2} φ(ω + σ²/4)` after validating `φ`.
pub fn balanced_gamma(phi: Phi, sigma: f64) -> Result<WeightSpec> {
    check_sigma(sigma)?;
    validate_phi(&phi)?;
    let label = format!("balanced[{}]", phi.name());
    Ok(WeightSpec {
        kind: WeightKind::BalancedFromPhi,
        sigma: Some(sigma),
        form: Form::Phi {
            phi,
            shift: 0.25 * sigma * sigma,
        },
        label,
    })
}

/// KMS weight `γ₀(ω) = e^{-ω/2} φ(ω)`, the `σ → 0` limit of [`balanced_gamma`].
pub fn kms_from_phi(phi: Phi) -> Result<WeightSpec> {
    validate_phi(&phi)?;
    let label = format!("kms[{}]", phi.name());
    Ok(WeightSpec {
        kind: WeightKind::KmsFromPhi,
        sigma: None,
        form: Form::Phi { phi, shift: 0.0 },
        label,
    })
}

/// `e^{-ω/2} φ(ω + shift)` for an arbitrary shift; balanced only when
/// `shift = σ²/4`. Used for negative controls.
pub fn shifted_phi_gamma(phi: Phi, sigma: f64, shift: f64) -> Result<WeightSpec> {
    check_sigma(sigma)?;
    validate_phi(&phi)?;
    let balanced = shift == 0.25 * sigma * sigma;
    let label = format!("shifted[{}, {shift}]", phi.name());
    Ok(WeightSpec {
        kind: if balanced {
            WeightKind::BalancedFromPhi
        } else {
            WeightKind::ShiftedPhi
        },
        sigma: Some(sigma),
        form: Form::Phi { phi, shift },
        label,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Sampled checks: `φ` even, nonnegative, and `φ(x) e^{|x|/2}` decaying.
pub fn validate_phi(phi: &Phi) -> Result<()> {
    let mut scale = 0.0_f64;
    for k in 0..=800 {
        let x = 0.05 * k as f64;
        let a = phi.eval(x);
        let b = phi.eval(-x);
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NotBalanced(format!("phi is not finite at ±{x}")));
        }
        if a < 0.0 || b < 0.0 {
            return Err(Error::NotBalanced(format!(
                "phi is negative near ±{x} (values {a:.3e}, {b:.3e})"
            )));
        }
        if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
            return Err(Error::NotBalanced(format!(
                "phi is not even: phi({x}) - phi(-{x}) = {:.3e}",
                a - b
            )));
        }
        scale = scale.max(a);
    }
    for &x in &[60.0_f64, -60.0] {
        let tail = (phi.ln_eval(x) + 0.5 * x.abs()).exp();
        if !(tail <= 1e-6 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::NotBalanced(format!(
                "phi(x) e^(|x|/2) does not decay: {tail:.3e} at x = {x}"
            )));
        }
    }
    Ok(())
}

impl WeightSpec {
    /// Arbitrary weight from a closure; `breakpoints` lists its kinks.
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        label: &str,
        f: F,
        breakpoints: Vec<f64>,
    ) -> WeightSpec {
        WeightSpec {
            kind: WeightKind::Custom,
            sigma: None,
            form: Form::Custom {
                f: Arc::new(f),
                breakpoints,
            },
            label: label.to_string(),
        }
    }

    /// New weight `ω ↦ g(self, ω)`, keeping the kinks of `self`.
    pub fn derived<F: Fn(&WeightSpec, f64) -> f64 + Send + Sync + 'static>(
        &self,
        label: &str,
        g: F,
    ) -> WeightSpec {
        let base = self.clone();
        let breakpoints = self.breakpoints();
        WeightSpec::custom(label, move |w| g(&base, w), breakpoints)
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phi(&self) -> Option<&Phi> {
        match &self.form {
            Form::Phi { phi, .. } => Some(phi),
            _ => None,
        }
    }

    /// The shift `s` in `e^{-ω/2} φ(ω + s)`, for φ-based weights.
    pub fn shift(&self) -> Option<f64> {
        match &self.form {
            Form::Phi { shift, .. } => Some(*shift),
            _ => None,
        }
    }

    pub fn is_kms(&self) -> bool {
        matches!(
            self.kind,
            WeightKind::KmsGlauber | WeightKind::KmsMetropolis | WeightKind::KmsFromPhi
        )
    }

    /// Whether this weight is balanced for a filter of width `sigma`.
    pub fn is_balanced_for(&self, sigma: f64) -> bool {
        self.kind == WeightKind::BalancedFromPhi && self.sigma == Some(sigma)
    }

    pub fn eval(&self, w: f64) -> f64 {
        match &self.form {
            Form::Custom { f, .. } => f(w),
            _ => self.ln_eval(w).exp(),
        }
    }

    /// `ln γ(ω)`; `-∞` where `γ` vanishes and NaN where it is negative.
    pub fn ln_eval(&self, w: f64) -> f64 {
        match &self.form {
            Form::Glauber => {
                if w > 0.0 {
                    -w - (-w).exp().ln_1p()
                } else {
                    -w.exp().ln_1p()
                }
            }
            Form::Metropolis => -w.max(0.0),
            Form::Phi { phi, shift } => -0.5 * w + phi.ln_eval(w + shift),
            Form::Custom { f, .. } => f(w).ln(),
        }
    }

    /// Points where `γ` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            Form::Glauber => Vec::new(),
            Form::Metropolis => vec![0.0],
            Form::Phi { phi, shift } => phi.kinks().into_iter().map(|k| k - shift).collect(),
            Form::Custom { breakpoints, .. } => breakpoints.clone(),
        }
    }

    /// `max |γ(-ω) - e^ω γ(ω)| / (1 + γ(ω))` over `grid`.
    pub fn kms_defect(&self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&w| {
                let g = self.eval(w);
                let lhs = self.eval(-w);
                let rhs = (w + self.ln_eval(w)).exp();
                (lhs - rhs).abs() / (1.0 + g)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest sampled value of `γ` on `grid`.
    pub fn min_sample(&self, grid: &[f64]) -> f64 {
        grid.iter().map(|&w| self.eval(w)).fold(f64::INFINITY, f64::min)
    }
}

/// Uniform grid helper: `n + 1` points spanning `[a, b]`.
pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| a + (b - a) * k as f64 / n as f64)
        .collect()
}
